#pragma once

// IQDS v1: flat binary container for labeled I/Q frames.
//
//   offset  size  field
//   0       4     magic "IQDS"
//   4       2     u16 version (= 1)
//   6       1     u8 flags (bit 0: per-frame channel metadata block present)
//   7       4     u32 frame_count
//   11      4     u32 frame_len N
//   15      ...   frame_count records: u8 label (255 = unlabeled),
//                 then N interleaved (I, Q) pairs as f32
//   ...     ...   if flags bit 0: frame_count records of 4 f64
//                 (gain, phase, cfo, snr_db)
//
// All integers and floats little-endian. Samples are stored in single
// precision (training math upstream/downstream is double precision; the file
// is the only lossy boundary).

#include <string>
#include <vector>

#include "fediq/signal.hpp"

namespace fediq {

inline constexpr std::uint16_t kIqdsVersion = 1;

// Write frames to path. All frames must share one length; when with_meta is
// set every frame must carry channel metadata.
void write_iqds(const std::string& path, const std::vector<IqFrame>& frames, bool with_meta);

// Read a full IQDS file. Truncated or malformed input raises data_error with
// the byte offset of the problem.
std::vector<IqFrame> read_iqds(const std::string& path);

}  // namespace fediq
