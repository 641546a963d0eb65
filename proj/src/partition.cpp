#include "fediq/partition.hpp"

#include <algorithm>
#include <numeric>

namespace fediq {

void DirichletSpec::validate() const {
    require(alpha > 0.0, "dirichlet: alpha must be positive");
    require(num_clients >= 1, "dirichlet: need at least one client");
}

CountTable default_count_table() {
    return {
        {6000, 6000, 1000, 1000},
        {1000, 6000, 6000, 1000},
        {1000, 1000, 6000, 6000},
        {6000, 1000, 1000, 6000},
    };
}

std::vector<std::vector<IqFrame>> fixed_partition(
    const std::vector<std::vector<IqFrame>>& frames_by_class, const CountTable& table) {
    require(!table.empty(), "fixed_partition: empty count table");
    const std::size_t num_classes = frames_by_class.size();
    for (const auto& row : table)
        require(row.size() == num_classes, "fixed_partition: table row/class count mismatch");

    // Validate availability up front so no partial output is produced.
    for (std::size_t k = 0; k < num_classes; ++k) {
        std::size_t needed = 0;
        for (const auto& row : table) needed += row[k];
        require(needed <= frames_by_class[k].size(),
                "fixed_partition: class " + std::to_string(k) + " has " +
                    std::to_string(frames_by_class[k].size()) + " frames but " +
                    std::to_string(needed) + " requested");
    }

    std::vector<std::size_t> cursor(num_classes, 0);
    std::vector<std::vector<IqFrame>> out(table.size());
    for (std::size_t c = 0; c < table.size(); ++c) {
        for (std::size_t k = 0; k < num_classes; ++k) {
            for (std::size_t i = 0; i < table[c][k]; ++i)
                out[c].push_back(frames_by_class[k][cursor[k]++]);
        }
    }
    return out;
}

std::vector<double> dirichlet_fractions(const DirichletSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<double> draws(static_cast<std::size_t>(spec.num_clients));
    double total = 0.0;
    for (auto& d : draws) {
        d = rng.gamma(spec.alpha);
        total += d;
    }
    require_internal(total > 0.0, "dirichlet: degenerate gamma draws");
    for (auto& d : draws) d /= total;
    return draws;
}

std::vector<std::size_t> integerize_fractions(const std::vector<double>& fractions,
                                              std::size_t total) {
    require(!fractions.empty(), "integerize_fractions: empty fractions");
    std::vector<std::size_t> counts(fractions.size());
    std::vector<double> remainder(fractions.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        require(fractions[i] >= 0.0, "integerize_fractions: negative fraction");
        const double want = fractions[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(want);
        remainder[i] = want - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    require_internal(assigned <= total, "integerize_fractions: floor overshoot");

    // Hand out the remainder by descending fractional part; stable sort keeps
    // ties on the lower client id.
    std::vector<std::size_t> order(fractions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < total; ++i) {
        counts[order[i % order.size()]] += 1;
        ++assigned;
    }
    return counts;
}

CountTable dirichlet_count_table(const std::vector<std::size_t>& class_totals,
                                 const DirichletSpec& spec, Rng& rng) {
    spec.validate();
    CountTable table(static_cast<std::size_t>(spec.num_clients),
                     std::vector<std::size_t>(class_totals.size(), 0));
    for (std::size_t k = 0; k < class_totals.size(); ++k) {
        const auto fractions = dirichlet_fractions(spec, rng);
        const auto counts = integerize_fractions(fractions, class_totals[k]);
        for (std::size_t c = 0; c < counts.size(); ++c) table[c][k] = counts[c];
    }
    return table;
}

std::vector<std::vector<IqFrame>> dirichlet_partition(
    const std::vector<std::vector<IqFrame>>& frames_by_class, const DirichletSpec& spec,
    Rng& rng) {
    std::vector<std::size_t> totals(frames_by_class.size());
    for (std::size_t k = 0; k < frames_by_class.size(); ++k)
        totals[k] = frames_by_class[k].size();
    return fixed_partition(frames_by_class, dirichlet_count_table(totals, spec, rng));
}

std::vector<std::size_t> class_histogram(const std::vector<IqFrame>& pool) {
    std::vector<std::size_t> hist;
    for (const auto& fr : pool) {
        require(fr.label >= 0, "class_histogram: pool contains unlabeled frames");
        if (hist.size() <= static_cast<std::size_t>(fr.label))
            hist.resize(static_cast<std::size_t>(fr.label) + 1, 0);
        hist[static_cast<std::size_t>(fr.label)] += 1;
    }
    return hist;
}

TestSplitResult make_test_split(const std::vector<IqFrame>& labeled,
                                const std::function<IqFrame(int, std::size_t)>& gen) {
    require(!labeled.empty(), "make_test_split: empty labeled pool");
    const auto hist = class_histogram(labeled);

    TestSplitResult out;
    out.train = labeled;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const std::size_t want = hist[k] / 10;
        for (std::size_t i = 0; i < want; ++i) {
            IqFrame fr = gen(static_cast<int>(k), i);
            fr.label = static_cast<int>(k);
            out.test.push_back(std::move(fr));
        }
    }
    return out;
}

}  // namespace fediq
