#pragma once

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "image.hpp"
#include "invariants.hpp"
#include "layer.hpp"
#include "text.hpp"

namespace ciconv {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

struct PngReadState {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
    // Owned by the caller so that a longjmp out of libpng never skips a destructor.
    std::vector<std::uint8_t>* pixels = nullptr;
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    char message[256] = {};
};

inline void png_read_callback(png_structp png, png_bytep out, png_size_t n) {
    auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (state->bytes.size() - state->offset < n) png_error(png, "unexpected end of PNG data");
    std::memcpy(out, state->bytes.data() + state->offset, n);
    state->offset += n;
}

inline void png_error_callback(png_structp png, png_const_charp msg) {
    auto* state = static_cast<PngReadState*>(png_get_error_ptr(png));
    std::strncpy(state->message, msg, sizeof state->message - 1);
    png_longjmp(png, 1);
}

inline void png_warning_callback(png_structp, png_const_charp) {}

// Decodes to interleaved RGB at 8 or 16 bits (big-endian samples). Returns
// false with state->message set on failure.
inline bool png_decode_raw(PngReadState* state) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, state, png_error_callback,
                                             png_warning_callback);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, state, png_read_callback);
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    state->width = png_get_image_width(png, info);
    state->height = png_get_image_height(png, info);
    state->bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    if (png_get_channels(png, info) != 3 || state->width == 0 || state->height == 0 ||
        row_bytes != std::size_t(state->width) * 3 * (state->bit_depth / 8)) {
        png_error(png, "unsupported PNG layout");
    }
    state->pixels->resize(row_bytes * state->height);
    for (png_uint_32 y = 0; y < state->height; ++y)
        png_read_row(png, state->pixels->data() + y * row_bytes, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline bool has_png_signature(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

inline RgbImage decode_png(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> pixels;
    PngReadState state;
    state.bytes = bytes;
    state.pixels = &pixels;
    if (!png_decode_raw(&state))
        throw DecodeError(std::string("PNG decode failed: ") +
                          (state.message[0] ? state.message : "libpng initialization"));
    if (state.width > 1u << 20 || state.height > 1u << 20)
        throw InvalidInput("PNG dimensions too large");
    RgbImage img(static_cast<int>(state.width), static_cast<int>(state.height));
    auto out = img.values();
    if (state.bit_depth == 16) {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = ((pixels[2 * i] << 8) | pixels[2 * i + 1]) / 65535.0;
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = pixels[i] / 255.0;
    }
    return img;
}

// Binary PPM (P6): header tokens separated by whitespace, '#' comments allowed.
inline RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 2;
    auto next_token = [&]() -> long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        long value = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos++] - '0');
            if (++digits > 9) throw DecodeError("PPM header value too large");
        }
        if (digits == 0) throw DecodeError("malformed PPM header");
        return value;
    };
    const long width = next_token();
    const long height = next_token();
    const long maxval = next_token();
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw DecodeError("malformed PPM header");
    ++pos;
    if (width == 0 || height == 0) throw InvalidInput("PPM image has zero dimension");
    if (maxval < 1 || maxval > 65535) throw DecodeError("PPM maxval out of range");
    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    const std::size_t needed = std::size_t(width) * height * 3 * sample_bytes;
    if (bytes.size() - pos < needed) throw DecodeError("truncated PPM pixel data");
    RgbImage img(static_cast<int>(width), static_cast<int>(height));
    auto out = img.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const unsigned v = sample_bytes == 2 ? (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1]
                                             : bytes[pos + i];
        if (v > unsigned(maxval)) throw DecodeError("PPM sample exceeds maxval");
        out[i] = double(v) / double(maxval);
    }
    return img;
}

}  // namespace detail

/// Inverse sRGB transfer function, applied per sample.
inline double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

/// Decodes an 8/16-bit PNG or a binary PPM (P6) to [0,1] RGB. Grayscale is
/// replicated to three channels and alpha is dropped. Values are used as
/// stored unless `linearize` requests sRGB decoding.
inline RgbImage decode_image(std::span<const std::uint8_t> bytes, bool linearize = false) {
    RgbImage img;
    if (detail::has_png_signature(bytes)) {
        img = detail::decode_png(bytes);
    } else if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
        img = detail::decode_ppm(bytes);
    } else {
        throw DecodeError("unrecognized image format (expected PNG or binary PPM)");
    }
    if (linearize)
        for (auto& v : img.values()) v = srgb_to_linear(v);
    return img;
}

inline Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("failed writing " + path.string());
}

inline RgbImage read_image(const std::filesystem::path& path, bool linearize = false) {
    return decode_image(read_file(path), linearize);
}

/// Regular .png / .ppm files directly inside `dir`, sorted by path.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InvalidInput("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".ppm") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw InvalidInput("no .png or .ppm images in " + dir.string());
    return out;
}

namespace detail {

struct PngWriteState {
    Bytes* out = nullptr;
    char message[256] = {};
};

inline void png_write_callback(png_structp png, png_bytep data, png_size_t n) {
    auto* state = static_cast<PngWriteState*>(png_get_io_ptr(png));
    state->out->insert(state->out->end(), data, data + n);
}

inline void png_flush_callback(png_structp) {}

inline void png_write_error_callback(png_structp png, png_const_charp msg) {
    auto* state = static_cast<PngWriteState*>(png_get_error_ptr(png));
    std::strncpy(state->message, msg, sizeof state->message - 1);
    png_longjmp(png, 1);
}

// 8-bit PNG with 1 (gray) or 3 (RGB) channels from a tightly packed buffer.
inline bool png_encode_raw(PngWriteState* state, const std::uint8_t* pixels, int width, int height,
                           int channels) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, state,
                                              png_write_error_callback, png_warning_callback);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, state, png_write_callback, png_flush_callback);
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = std::size_t(width) * channels;
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(pixels + y * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

inline Bytes encode_png(const std::vector<std::uint8_t>& pixels, int width, int height, int channels) {
    Bytes out;
    PngWriteState state{&out};
    if (!png_encode_raw(&state, pixels.data(), width, height, channels))
        throw Error(std::string("PNG encode failed: ") + state.message);
    return out;
}

inline std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace detail

/// 8-bit RGB PNG; samples are clamped to [0,1] and rounded.
inline Bytes encode_rgb_png(const RgbImage& img) {
    require_finite(img.values(), "rgb image");
    std::vector<std::uint8_t> pixels(img.values().size());
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = detail::to_byte(img.values()[i]);
    return detail::encode_png(pixels, img.width(), img.height(), 3);
}

/// Raw float dump: "CIF1\n", "height width channels\n", then little-endian
/// float32 samples in row-major, channel-interleaved order.
struct FloatDump {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<float> data;
};

inline Bytes encode_float_dump(const FloatDump& dump) {
    const std::string header = "CIF1\n" + std::to_string(dump.height) + " " +
                               std::to_string(dump.width) + " " + std::to_string(dump.channels) + "\n";
    Bytes out(header.begin(), header.end());
    out.reserve(out.size() + dump.data.size() * 4);
    for (float f : dump.data) {
        const auto bits = std::bit_cast<std::uint32_t>(f);
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
    return out;
}

inline FloatDump parse_float_dump(std::span<const std::uint8_t> bytes) {
    constexpr std::string_view magic = "CIF1\n";
    if (bytes.size() < magic.size() ||
        std::string_view(reinterpret_cast<const char*>(bytes.data()), magic.size()) != magic)
        throw DecodeError("missing CIF1 magic");
    std::size_t pos = magic.size();
    const auto eol = std::find(bytes.begin() + pos, bytes.end(), std::uint8_t('\n'));
    if (eol == bytes.end()) throw DecodeError("unterminated CIF header");
    const std::string header(bytes.begin() + pos, eol);
    pos = static_cast<std::size_t>(eol - bytes.begin()) + 1;
    FloatDump dump;
    const auto fields = detail::split(header, ' ');
    if (fields.size() != 3) throw DecodeError("CIF header must hold height width channels");
    auto to_int = [](const std::string& s) {
        int v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 1)
            throw DecodeError("bad CIF header field '" + s + "'");
        return v;
    };
    dump.height = to_int(fields[0]);
    dump.width = to_int(fields[1]);
    dump.channels = to_int(fields[2]);
    const std::size_t count = std::size_t(dump.height) * dump.width * dump.channels;
    if (bytes.size() - pos != count * 4) throw DecodeError("CIF payload size does not match header");
    dump.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(bytes[pos + 4 * i + b]) << (8 * b);
        dump.data[i] = std::bit_cast<float>(bits);
    }
    return dump;
}

inline FloatDump to_float_dump(const Plane& map) {
    FloatDump dump{map.height(), map.width(), 1, std::vector<float>(map.size())};
    for (std::size_t i = 0; i < map.size(); ++i) dump.data[i] = static_cast<float>(map[i]);
    return dump;
}

inline Plane to_plane(const FloatDump& dump) {
    if (dump.channels != 1) throw InvalidInput("float dump has more than one channel");
    Plane p(dump.width, dump.height);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = dump.data[i];
    return p;
}

enum class MapEncoding { png8, float_dump };

/// png8: linear rescale of [min, max] to [0, 255] (a constant map becomes 128).
/// float_dump: the CIF format above, float32 precision.
inline Bytes encode_map(const Plane& map, MapEncoding mode) {
    require_finite(map.values(), "map");
    if (mode == MapEncoding::float_dump) return encode_float_dump(to_float_dump(map));
    const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
    std::vector<std::uint8_t> pixels(map.size(), 128);
    if (*hi > *lo) {
        const double lo_v = *lo, range = *hi - *lo;
        for (std::size_t i = 0; i < map.size(); ++i)
            pixels[i] = static_cast<std::uint8_t>(std::lround((map[i] - lo_v) / range * 255.0));
    }
    return detail::encode_png(pixels, map.width(), map.height(), 1);
}

inline Bytes encode_map(const InvariantMap& map, MapEncoding mode) { return encode_map(map.values, mode); }
inline Bytes encode_map(const CIConvOutput& out, MapEncoding mode) { return encode_map(out.map, mode); }

}  // namespace ciconv
