#include "choreo/audio.hpp"

#include "choreo/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace choreo {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string where = path.string() + ": ";

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError(where + "not a RIFF/WAVE file");
    }

    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (available < 16) throw FormatError(where + "short fmt chunk");
            format = le16(chunk + 8);
            channels = le16(chunk + 10);
            sample_rate = le32(chunk + 12);
            bits = le16(chunk + 22);
            if (format == kFormatExtensible) {
                if (available < 26) throw FormatError(where + "short extensible fmt chunk");
                format = le16(chunk + 8 + 24);
            }
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_size = available;
        }
        pos = body + size + (size & 1u);
    }

    if (channels == 0 || sample_rate == 0) throw FormatError(where + "missing fmt chunk");
    if (data == nullptr) throw FormatError(where + "missing data chunk");

    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool float32 = format == kFormatFloat && bits == 32;
    if (!pcm16 && !float32) {
        throw FormatError(where + "unsupported encoding (need PCM 16-bit or float 32-bit)");
    }

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = data_size / frame_bytes;

    AudioClip clip{std::vector<double>(frames), static_cast<double>(sample_rate)};
    for (std::size_t f = 0; f < frames; ++f) {
        double sum = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + f * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                sum += static_cast<std::int16_t>(le16(p)) / 32768.0;
            } else {
                sum += std::bit_cast<float>(le32(p));
            }
        }
        clip.samples[f] = sum / channels;
    }
    clip.validate();
    return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& audio, WavEncoding encoding) {
    audio.validate();
    const bool pcm16 = encoding == WavEncoding::Pcm16;
    const std::uint16_t bits = pcm16 ? 16 : 32;
    const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(audio.samples.size() * (bits / 8));

    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, pcm16 ? kFormatPcm : kFormatFloat);
    put16(out, 1);
    put32(out, rate);
    put32(out, rate * (bits / 8));
    put16(out, static_cast<std::uint16_t>(bits / 8));
    put16(out, bits);
    put_tag(out, "data");
    put32(out, data_bytes);
    for (double s : audio.samples) {
        const double clamped = std::clamp(s, -1.0, 1.0);
        if (pcm16) {
            const auto q = static_cast<std::int16_t>(std::lround(std::clamp(clamped * 32768.0, -32768.0, 32767.0)));
            put16(out, static_cast<std::uint16_t>(q));
        } else {
            put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(clamped)));
        }
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("failed writing " + path.string());
}

}  // namespace choreo
