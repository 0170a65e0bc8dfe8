/*
 * Copyright 2026 The nrfbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Readers and writers for the on-disk sample formats:
//   .pgm / .ppm  netpbm images (P2/P3/P5/P6), rescaled by maxval
//   .vec         one sample, whitespace-separated values in [0,1]
//   .tsv         one sample per line, values in [0,1]

#ifndef NRFBENCH_SAMPLE_IO_HPP_
#define NRFBENCH_SAMPLE_IO_HPP_

#include <glob.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nrfbench/error.hpp"
#include "nrfbench/tensor.hpp"

namespace nrfbench {

namespace detail {

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string Lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Reads the next header token, skipping whitespace and '#' comments.
inline std::string NetpbmToken(const std::string& buf, std::size_t& pos) {
  while (pos < buf.size()) {
    if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  return buf.substr(start, pos - start);
}

inline std::vector<double> ParseValues(const std::string& line,
                                       const std::string& where) {
  std::vector<double> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      throw Error(ErrorKind::kParseError, where + ": bad value '" + tok + "'");
    }
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::kShapeMismatch,
                  where + ": value " + tok + " outside [0,1]");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Decodes a netpbm image into a (C,H,W) tensor scaled to [0,1].
inline Tensor ReadNetpbm(const std::filesystem::path& path) {
  const std::string buf = detail::ReadFile(path);
  std::size_t pos = 0;
  const std::string magic = detail::NetpbmToken(buf, pos);
  std::size_t channels = 0;
  bool binary = false;
  if (magic == "P2") channels = 1;
  else if (magic == "P5") channels = 1, binary = true;
  else if (magic == "P3") channels = 3;
  else if (magic == "P6") channels = 3, binary = true;
  else throw Error(ErrorKind::kParseError, path.string() + ": not a PGM/PPM file");

  std::size_t width = 0, height = 0;
  long maxval = 0;
  try {
    width = std::stoul(detail::NetpbmToken(buf, pos));
    height = std::stoul(detail::NetpbmToken(buf, pos));
    maxval = std::stol(detail::NetpbmToken(buf, pos));
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParseError, path.string() + ": bad netpbm header");
  }
  if (width == 0 || height == 0 || maxval <= 0 || maxval > 65535) {
    throw Error(ErrorKind::kParseError, path.string() + ": bad netpbm header");
  }
  const std::size_t n = width * height * channels;
  std::vector<double> interleaved(n);
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    if (buf.size() < pos + n * bytes) {
      throw Error(ErrorKind::kParseError, path.string() + ": truncated raster");
    }
    for (std::size_t i = 0; i < n; ++i) {
      unsigned v = static_cast<unsigned char>(buf[pos + i * bytes]);
      if (bytes == 2) v = (v << 8) | static_cast<unsigned char>(buf[pos + i * 2 + 1]);
      interleaved[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = detail::NetpbmToken(buf, pos);
      if (tok.empty()) throw Error(ErrorKind::kParseError, path.string() + ": truncated raster");
      interleaved[i] = std::min(1.0, std::stod(tok) / static_cast<double>(maxval));
    }
  }
  // interleaved HWC -> planar CHW
  Tensor out({channels, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        out.data[(c * height + y) * width + x] =
            interleaved[(y * width + x) * channels + c];
      }
    }
  }
  return out;
}

/// Writes a (1,H,W) or (3,H,W) tensor as binary 8-bit PGM/PPM.
inline void WriteNetpbm(const std::filesystem::path& path, const Tensor& img) {
  if (img.shape.size() != 3 || (img.shape[0] != 1 && img.shape[0] != 3)) {
    throw Error(ErrorKind::kShapeMismatch, "netpbm output needs (1|3,H,W)");
  }
  const std::size_t c = img.shape[0], h = img.shape[1], w = img.shape[2];
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  out << (c == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < c; ++k) {
        const double v = std::clamp(img.data[(k * h + y) * w + x], 0.0, 1.0);
        out.put(static_cast<char>(std::lround(v * 255.0)));
      }
    }
  }
}

/// Reads every sample stored in a file; images and .vec yield exactly one.
inline std::vector<Tensor> ReadSampleFile(const std::filesystem::path& path) {
  const std::string ext = detail::Lowercase(path.extension().string());
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return {ReadNetpbm(path)};
  const std::string buf = detail::ReadFile(path);
  if (ext == ".vec") {
    return {Tensor::Vector(detail::ParseValues(buf, path.string()))};
  }
  if (ext == ".tsv") {
    std::vector<Tensor> out;
    std::istringstream ss(buf);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.push_back(Tensor::Vector(detail::ParseValues(
          line, path.string() + ":" + std::to_string(lineno))));
    }
    return out;
  }
  throw Error(ErrorKind::kParseError, path.string() + ": unknown sample format");
}

/// One sample per line with round-trip precision.
inline void WriteTsv(const std::filesystem::path& path,
                     const std::vector<const Tensor*>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  char buf[32];
  for (const Tensor* t : rows) {
    for (std::size_t i = 0; i < t->data.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", t->data[i]);
      if (i) out << '\t';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

/// Sorted list of paths matching a shell glob; empty when nothing matches.
inline std::vector<std::filesystem::path> Glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::filesystem::path> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

/// Nearest-neighbour resize of a (C,H,W) image; 1<->3 channel conversion by
/// replication or channel mean. Flat samples are reshaped when sizes agree.
inline Tensor ResizeTo(const Tensor& in, const Shape& target) {
  if (target.empty() || in.shape == target) return in;
  if (in.shape.size() == 1) {
    if (NumElements(target) != in.size()) {
      throw Error(ErrorKind::kShapeMismatch, "cannot reshape " + ShapeToString(in.shape) +
                                                 " to " + ShapeToString(target));
    }
    return Tensor(target, in.data);
  }
  if (in.shape.size() != 3 || target.size() != 3) {
    throw Error(ErrorKind::kShapeMismatch, "cannot resize " + ShapeToString(in.shape) +
                                               " to " + ShapeToString(target));
  }
  const std::size_t ic = in.shape[0], ih = in.shape[1], iw = in.shape[2];
  const std::size_t oc = target[0], oh = target[1], ow = target[2];
  if (!(ic == oc || (ic == 1 && oc == 3) || (ic == 3 && oc == 1))) {
    throw Error(ErrorKind::kShapeMismatch, "unsupported channel conversion");
  }
  Tensor out(target);
  for (std::size_t y = 0; y < oh; ++y) {
    const std::size_t sy = std::min(ih - 1, (y * ih) / oh);
    for (std::size_t x = 0; x < ow; ++x) {
      const std::size_t sx = std::min(iw - 1, (x * iw) / ow);
      for (std::size_t c = 0; c < oc; ++c) {
        double v;
        if (ic == oc) {
          v = in.data[(c * ih + sy) * iw + sx];
        } else if (ic == 1) {
          v = in.data[sy * iw + sx];
        } else {
          v = (in.data[sy * iw + sx] + in.data[(ih + sy) * iw + sx] +
               in.data[(2 * ih + sy) * iw + sx]) / 3.0;
        }
        out.data[(c * oh + y) * ow + x] = v;
      }
    }
  }
  return out;
}

}  // namespace nrfbench

#endif  // NRFBENCH_SAMPLE_IO_HPP_
