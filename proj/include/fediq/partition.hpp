#pragma once

// Non-IID client partitioning.
//
// Two allocation mechanisms: fixed per-client per-class count tables, and
// Dirichlet-distributed class fractions (drawn as normalized Gammas). Counts
// are integerized by flooring and distributing the remainder to the largest
// fractional parts, ties broken toward the lower client id, so that every
// frame of a class is assigned to exactly one client.

#include <cstddef>
#include <functional>
#include <vector>

#include "fediq/rng.hpp"
#include "fediq/signal.hpp"

namespace fediq {

// counts[client][class]
using CountTable = std::vector<std::vector<std::size_t>>;

struct ClientDataset {
    int client_id = 0;
    std::vector<IqFrame> unlabeled;
    std::vector<IqFrame> labeled;
    std::vector<IqFrame> test;
};

struct DirichletSpec {
    double alpha = 0.5;   // concentration; lower = more heterogeneous
    int num_clients = 4;

    void validate() const;
};

// Default 4-client, 4-class unlabeled count table used by the heterogeneity
// recipes. Labeled pools are one-fifth of these counts.
CountTable default_count_table();

// Split per-class frame pools according to a fixed count table. Frames are
// consumed in order, client 0 first; throws (naming the class) if any class
// has too few frames. Output pools interleave classes in class order.
std::vector<std::vector<IqFrame>> fixed_partition(
    const std::vector<std::vector<IqFrame>>& frames_by_class, const CountTable& table);

// One Dirichlet(alpha * 1) draw over clients: normalized Gamma(alpha, 1)
// variates.
std::vector<double> dirichlet_fractions(const DirichletSpec& spec, Rng& rng);

// Integerize fractions so the counts sum exactly to total: floor, then give
// the remainder to the largest fractional parts (ties -> lower index).
std::vector<std::size_t> integerize_fractions(const std::vector<double>& fractions,
                                              std::size_t total);

// Per-class Dirichlet split: one fraction draw per class, integerized over
// the full class pool. Draw order is class-major and documented: class 0's
// Gammas first.
std::vector<std::vector<IqFrame>> dirichlet_partition(
    const std::vector<std::vector<IqFrame>>& frames_by_class, const DirichletSpec& spec,
    Rng& rng);

// Count table induced by Dirichlet fractions for per-class totals, without
// materializing frames (used when datasets are generated streaming).
CountTable dirichlet_count_table(const std::vector<std::size_t>& class_totals,
                                 const DirichletSpec& spec, Rng& rng);

struct TestSplitResult {
    std::vector<IqFrame> train;  // the input labeled pool, unchanged
    std::vector<IqFrame> test;   // freshly generated frames
};

// Build a test pool with floor(count/10) frames per class present in the
// labeled pool. Test frames are freshly drawn from `gen` (same generation
// law as training data), hence disjoint from training frames by
// construction. `gen` receives (class index, ordinal within class).
TestSplitResult make_test_split(const std::vector<IqFrame>& labeled,
                                const std::function<IqFrame(int, std::size_t)>& gen);

// Per-class frame counts of a pool; size = max label + 1.
std::vector<std::size_t> class_histogram(const std::vector<IqFrame>& pool);

}  // namespace fediq
