#pragma once

#include "polarsep/image.hpp"

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace polarsep {

// Raster I/O is binary PGM (P5) and PPM (P6) with maxval 255 or 65535.
// Both are lossless, carry 8- and 16-bit integer samples, and keep the
// ingestion path free of external decoders.

namespace io_detail {

struct RawRaster {
  Index width = 0;
  Index height = 0;
  int channels = 0;  // 1 or 3
  int maxval = 0;
  std::vector<std::uint16_t> samples;  // interleaved, row-major
};

inline int next_header_token(std::istream& in, std::string& token) {
  token.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!token.empty()) return 0;
    } else {
      token.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  return token.empty() ? -1 : 0;
}

inline RawRaster read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string magic;
  if (next_header_token(in, magic) != 0)
    throw IoError("'" + path + "' is not a PNM file (empty header)");

  RawRaster r;
  if (magic == "P5")
    r.channels = 1;
  else if (magic == "P6")
    r.channels = 3;
  else
    throw IoError("'" + path + "' has unsupported magic '" + magic +
                  "' (expected binary PGM/PPM)");

  std::string tok;
  long fields[3];
  for (long& field : fields) {
    if (next_header_token(in, tok) != 0)
      throw IoError("'" + path + "' has a truncated PNM header");
    try {
      field = std::stol(tok);
    } catch (const std::exception&) {
      throw IoError("'" + path + "' has a malformed PNM header token '" + tok + "'");
    }
  }
  r.width = fields[0];
  r.height = fields[1];
  r.maxval = static_cast<int>(fields[2]);
  if (r.width <= 0 || r.height <= 0)
    throw IoError("'" + path + "' declares empty dimensions");
  if (r.maxval != 255 && r.maxval != 65535)
    throw IoError("'" + path + "' has unsupported maxval " + std::to_string(r.maxval));

  const std::size_t count =
      static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height) *
      static_cast<std::size_t>(r.channels);
  r.samples.resize(count);
  if (r.maxval == 255) {
    std::vector<std::uint8_t> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
      throw IoError("'" + path + "' is truncated");
    for (std::size_t i = 0; i < count; ++i) r.samples[i] = buf[i];
  } else {
    std::vector<std::uint8_t> buf(count * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * 2));
    if (static_cast<std::size_t>(in.gcount()) != count * 2)
      throw IoError("'" + path + "' is truncated");
    for (std::size_t i = 0; i < count; ++i) {
      // PNM 16-bit samples are big-endian.
      r.samples[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    }
  }
  return r;
}

inline void write_pnm(const std::string& path, Index width, Index height,
                      int channels, int maxval,
                      const std::vector<std::uint16_t>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << (channels == 1 ? "P5" : "P6") << "\n"
      << width << " " << height << "\n"
      << maxval << "\n";
  if (maxval == 255) {
    std::vector<std::uint8_t> buf(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
      buf[i] = static_cast<std::uint8_t>(samples[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  } else {
    std::vector<std::uint8_t> buf(samples.size() * 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      buf[2 * i] = static_cast<std::uint8_t>(samples[i] >> 8);
      buf[2 * i + 1] = static_cast<std::uint8_t>(samples[i] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError("failed to write '" + path + "'");
}

}  // namespace io_detail

// Loads a PGM/PPM raster normalized to [0, 1]. Single-channel input is
// replicated to three channels.
template <typename Scalar>
RgbImageT<Scalar> load_image(const std::string& path) {
  const auto raw = io_detail::read_pnm(path);
  RgbImageT<Scalar> img;
  img.width = raw.width;
  img.height = raw.height;
  img.samples.resize(img.pixels(), 3);
  const Scalar scale = Scalar(1) / Scalar(raw.maxval);
  for (Index p = 0; p < img.pixels(); ++p) {
    if (raw.channels == 1) {
      const Scalar v = Scalar(raw.samples[static_cast<std::size_t>(p)]) * scale;
      img.samples.row(p).setConstant(v);
    } else {
      for (int c = 0; c < 3; ++c)
        img.samples(p, c) =
            Scalar(raw.samples[static_cast<std::size_t>(3 * p + c)]) * scale;
    }
  }
  return img;
}

template <typename Scalar>
GrayImageT<Scalar> load_gray(const std::string& path) {
  const auto raw = io_detail::read_pnm(path);
  if (raw.channels != 1)
    throw IoError("'" + path + "' is not single-channel");
  GrayImageT<Scalar> img;
  img.width = raw.width;
  img.height = raw.height;
  img.samples.resize(img.pixels());
  const Scalar scale = Scalar(1) / Scalar(raw.maxval);
  for (Index p = 0; p < img.pixels(); ++p)
    img.samples(p) = Scalar(raw.samples[static_cast<std::size_t>(p)]) * scale;
  return img;
}

struct SaveStats {
  Index clamped_above_one = 0;
};

// Quantizes to the given bit depth (8 or 16). Samples above 1 are clamped
// and counted; round-trip error stays within 1/(2^bit_depth - 1).
template <typename Scalar>
SaveStats save_image(const RgbImageT<Scalar>& img, const std::string& path,
                     int bit_depth = 16) {
  if (bit_depth != 8 && bit_depth != 16)
    throw SpecError("bit depth must be 8 or 16");
  check_valid(img);
  const int maxval = bit_depth == 8 ? 255 : 65535;
  SaveStats stats;
  std::vector<std::uint16_t> out(static_cast<std::size_t>(img.pixels()) * 3);
  for (Index p = 0; p < img.pixels(); ++p) {
    for (int c = 0; c < 3; ++c) {
      Scalar v = img.samples(p, c);
      if (v > Scalar(1)) {
        v = Scalar(1);
        ++stats.clamped_above_one;
      }
      out[static_cast<std::size_t>(3 * p + c)] =
          static_cast<std::uint16_t>(std::lround(double(v) * maxval));
    }
  }
  io_detail::write_pnm(path, img.width, img.height, 3, maxval, out);
  return stats;
}

template <typename Scalar>
SaveStats save_gray(const GrayImageT<Scalar>& img, const std::string& path,
                    int bit_depth = 16) {
  if (bit_depth != 8 && bit_depth != 16)
    throw SpecError("bit depth must be 8 or 16");
  const int maxval = bit_depth == 8 ? 255 : 65535;
  SaveStats stats;
  std::vector<std::uint16_t> out(static_cast<std::size_t>(img.pixels()));
  for (Index p = 0; p < img.pixels(); ++p) {
    Scalar v = img.samples(p);
    if (v > Scalar(1)) {
      v = Scalar(1);
      ++stats.clamped_above_one;
    }
    if (v < Scalar(0)) v = Scalar(0);
    out[static_cast<std::size_t>(p)] =
        static_cast<std::uint16_t>(std::lround(double(v) * maxval));
  }
  io_detail::write_pnm(path, img.width, img.height, 1, maxval, out);
  return stats;
}

// Extracts the angle tag from a stack filename: a `_000`, `_045`, `_090`
// or `_135` suffix immediately before the extension.
inline int angle_tag_from_filename(const std::string& path) {
  const std::string stem = std::filesystem::path(path).stem().string();
  static constexpr std::array<std::pair<const char*, int>, 4> tags = {{
      {"_000", 0}, {"_045", 45}, {"_090", 90}, {"_135", 135}}};
  for (const auto& [suffix, angle] : tags) {
    const std::string s(suffix);
    if (stem.size() >= s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0)
      return angle;
  }
  throw TagError("no angle tag (_000/_045/_090/_135) in '" + path + "'");
}

// Loads four angle-tagged frames into canonical 0/45/90/135 order.
template <typename Scalar>
PolarizedStackT<Scalar> load_stack(
    const std::vector<std::pair<std::string, int>>& path_angles) {
  if (path_angles.size() != 4)
    throw TagError("a polarized stack needs exactly 4 frames, got " +
                   std::to_string(path_angles.size()));
  std::array<std::string, 4> by_slot;
  std::array<bool, 4> seen = {false, false, false, false};
  for (const auto& [path, angle] : path_angles) {
    int slot = -1;
    for (int i = 0; i < 4; ++i)
      if (angle == static_cast<int>(kCanonicalAnglesDeg[i])) slot = i;
    if (slot < 0)
      throw TagError("angle " + std::to_string(angle) +
                     " is not one of 0/45/90/135 ('" + path + "')");
    if (seen[slot])
      throw TagError("duplicate angle tag " + std::to_string(angle) + " ('" + path + "')");
    seen[slot] = true;
    by_slot[static_cast<std::size_t>(slot)] = path;
  }

  PolarizedStackT<Scalar> stack;
  for (int i = 0; i < 4; ++i) {
    RgbImageT<Scalar> frame = load_image<Scalar>(by_slot[static_cast<std::size_t>(i)]);
    if (i == 0) {
      stack.width = frame.width;
      stack.height = frame.height;
    } else if (frame.width != stack.width || frame.height != stack.height) {
      throw DimensionError("frame '" + by_slot[static_cast<std::size_t>(i)] +
                           "' has mismatched dimensions");
    }
    stack.frames[static_cast<std::size_t>(i)] = std::move(frame.samples);
  }
  return stack;
}

template <typename Scalar>
PolarizedStackT<Scalar> load_stack(const std::vector<std::string>& paths) {
  std::vector<std::pair<std::string, int>> tagged;
  tagged.reserve(paths.size());
  for (const auto& p : paths) tagged.emplace_back(p, angle_tag_from_filename(p));
  return load_stack<Scalar>(tagged);
}

// Maps each 2x2 mosaic offset (index 2*dy + dx) to a polarizer angle in
// degrees; must be a permutation of {0, 45, 90, 135}.
struct MosaicPattern {
  std::array<int, 4> angle_deg_at_offset = {0, 45, 90, 135};
};

// Naive quarter-resolution split of a 2x2 polarization mosaic; grayscale
// samples are replicated across the three channels.
template <typename Scalar>
PolarizedStackT<Scalar> split_mosaic(const GrayImageT<Scalar>& raw,
                                     const MosaicPattern& pattern = {}) {
  if (raw.width % 2 != 0 || raw.height % 2 != 0)
    throw DimensionError("mosaic dimensions must be even, got " +
                         std::to_string(raw.width) + "x" + std::to_string(raw.height));
  std::array<int, 4> slot_of_offset;  // offset index -> canonical frame slot
  std::array<bool, 4> used = {false, false, false, false};
  for (int o = 0; o < 4; ++o) {
    int slot = -1;
    for (int i = 0; i < 4; ++i)
      if (pattern.angle_deg_at_offset[static_cast<std::size_t>(o)] ==
          static_cast<int>(kCanonicalAnglesDeg[i]))
        slot = i;
    if (slot < 0 || used[static_cast<std::size_t>(slot)])
      throw TagError("mosaic pattern must map offsets to a permutation of 0/45/90/135");
    used[static_cast<std::size_t>(slot)] = true;
    slot_of_offset[static_cast<std::size_t>(o)] = slot;
  }

  PolarizedStackT<Scalar> stack;
  stack.width = raw.width / 2;
  stack.height = raw.height / 2;
  for (auto& frame : stack.frames) frame.resize(stack.pixels(), 3);
  for (Index y = 0; y < stack.height; ++y) {
    for (Index x = 0; x < stack.width; ++x) {
      const Index p = y * stack.width + x;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int slot = slot_of_offset[static_cast<std::size_t>(2 * dy + dx)];
          const Scalar v = raw.samples((2 * y + dy) * raw.width + (2 * x + dx));
          stack.frames[static_cast<std::size_t>(slot)].row(p).setConstant(v);
        }
      }
    }
  }
  return stack;
}

}  // namespace polarsep
