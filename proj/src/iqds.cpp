#include "fediq/iqds.hpp"

#include <bit>

#include "fediq/common.hpp"
#include "fediq/fileio.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace fediq {

namespace {

[[noreturn]] void truncated(const std::string& path, std::size_t offset, const char* what) {
    throw data_error("IQDS file " + path + " truncated at byte offset " +
                     std::to_string(offset) + " while reading " + what);
}

}  // namespace

void write_iqds(const std::string& path, const std::vector<IqFrame>& frames, bool with_meta) {
    require(!frames.empty(), "write_iqds: no frames");
    const std::size_t n = frames[0].samples.size();
    require(n >= 1, "write_iqds: empty frame");
    for (const auto& fr : frames) {
        require(fr.samples.size() == n, "write_iqds: frames have differing lengths");
        require(fr.label >= -1 && fr.label <= 254, "write_iqds: label out of range");
        if (with_meta) require(fr.has_meta, "write_iqds: metadata requested but missing");
    }

    std::vector<unsigned char> out;
    out.reserve(15 + frames.size() * (1 + 8 * n) + (with_meta ? frames.size() * 32 : 0));
    out.insert(out.end(), {'I', 'Q', 'D', 'S'});
    le::put<std::uint16_t>(out, kIqdsVersion);
    le::put<std::uint8_t>(out, with_meta ? 1 : 0);
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(frames.size()));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(n));

    for (const auto& fr : frames) {
        le::put<std::uint8_t>(out, fr.label < 0 ? 255 : static_cast<std::uint8_t>(fr.label));
        for (const auto& s : fr.samples) {
            le::put<float>(out, static_cast<float>(s.real()));
            le::put<float>(out, static_cast<float>(s.imag()));
        }
    }
    if (with_meta) {
        for (const auto& fr : frames) {
            le::put<double>(out, fr.meta_gain);
            le::put<double>(out, fr.meta_phase);
            le::put<double>(out, fr.meta_cfo);
            le::put<double>(out, fr.meta_snr_db);
        }
    }

    write_file_bytes(path, out);
}

std::vector<IqFrame> read_iqds(const std::string& path) {
    const std::vector<unsigned char> bytes = read_file_bytes(path);
    std::size_t off = 0;

    if (bytes.size() < 15) truncated(path, bytes.size(), "header");
    require(bytes[0] == 'I' && bytes[1] == 'Q' && bytes[2] == 'D' && bytes[3] == 'S',
            "not an IQDS file: " + path);
    off = 4;
    const auto version = le::get<std::uint16_t>(&bytes[off]);
    require(version == kIqdsVersion,
            "unsupported IQDS version " + std::to_string(version) + " in " + path);
    off += 2;
    const std::uint8_t flags = bytes[off];
    off += 1;
    const auto count = le::get<std::uint32_t>(&bytes[off]);
    off += 4;
    const auto n = le::get<std::uint32_t>(&bytes[off]);
    off += 4;
    require(count >= 1 && n >= 1, "IQDS file " + path + " declares an empty dataset");
    const bool with_meta = (flags & 1) != 0;

    std::vector<IqFrame> frames(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t record = 1 + 8ull * n;
        if (off + record > bytes.size()) truncated(path, off, "frame record");
        const std::uint8_t raw_label = bytes[off];
        off += 1;
        IqFrame& fr = frames[i];
        fr.label = raw_label == 255 ? -1 : raw_label;
        fr.samples.resize(n);
        for (std::uint32_t k = 0; k < n; ++k) {
            const float re = le::get<float>(&bytes[off]);
            const float im = le::get<float>(&bytes[off + 4]);
            off += 8;
            fr.samples[k] = cplx(re, im);
        }
    }
    if (with_meta) {
        for (std::uint32_t i = 0; i < count; ++i) {
            if (off + 32 > bytes.size()) truncated(path, off, "metadata record");
            IqFrame& fr = frames[i];
            fr.has_meta = true;
            fr.meta_gain = le::get<double>(&bytes[off]);
            fr.meta_phase = le::get<double>(&bytes[off + 8]);
            fr.meta_cfo = le::get<double>(&bytes[off + 16]);
            fr.meta_snr_db = le::get<double>(&bytes[off + 24]);
            off += 32;
        }
    }
    require(off == bytes.size(),
            "IQDS file " + path + " has " + std::to_string(bytes.size() - off) +
                " trailing bytes at offset " + std::to_string(off));
    return frames;
}

}  // namespace fediq
