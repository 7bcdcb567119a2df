#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "kpnp/image.hpp"

namespace kpnp {

namespace detail {

// Skips whitespace and '#' comment lines between PGM header tokens.
inline int next_pgm_token(std::istream& in) {
  int c = in.get();
  for (;;) {
    while (c != EOF && std::isspace(c)) c = in.get();
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    break;
  }
  if (c == EOF) throw IoError("pgm: truncated header");
  int v = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw IoError("pgm: malformed header token");
  if (c != EOF) in.unget();
  return v;
}

}  // namespace detail

// Reads P2 (ASCII) or P5 (binary) grayscale; intensities are scaled to [0, 1].
inline Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("pgm: cannot open " + path);
  char m0 = char(in.get()), m1 = char(in.get());
  bool binary;
  if (m0 == 'P' && m1 == '5')
    binary = true;
  else if (m0 == 'P' && m1 == '2')
    binary = false;
  else
    throw IoError("pgm: unsupported magic in " + path);

  int w = detail::next_pgm_token(in);
  int h = detail::next_pgm_token(in);
  int maxval = detail::next_pgm_token(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw IoError("pgm: invalid dimensions or maxval in " + path);

  Image img(w, h);
  double scale = 1.0 / double(maxval);
  std::size_t n = img.size();
  if (binary) {
    int c = in.get();  // single whitespace after maxval
    if (c == EOF) throw IoError("pgm: truncated data in " + path);
    bool wide = maxval > 255;
    for (std::size_t i = 0; i < n; ++i) {
      int b0 = in.get();
      if (b0 == EOF) throw IoError("pgm: truncated data in " + path);
      int v = b0;
      if (wide) {
        int b1 = in.get();
        if (b1 == EOF) throw IoError("pgm: truncated data in " + path);
        v = (b0 << 8) | b1;
      }
      img.data[i] = double(v) * scale;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      long v;
      if (!(in >> v)) throw IoError("pgm: truncated data in " + path);
      if (v < 0 || v > maxval) throw IoError("pgm: sample out of range in " + path);
      img.data[i] = double(v) * scale;
    }
  }
  return img;
}

// Writes binary P5 with maxval 255; values are clamped to [0, 1] first.
inline void write_pgm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("pgm: cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (double v : img.data) {
    double c = std::clamp(v, 0.0, 1.0);
    int byte = int(std::lround(c * 255.0));
    out.put(char(static_cast<unsigned char>(byte)));
  }
  if (!out) throw IoError("pgm: write failed for " + path);
}

}  // namespace kpnp
