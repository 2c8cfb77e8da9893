// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Writes a letterboxed gray clip as binary PGM frames:
//   make_frames <dir> <width> <height> <band> <frames>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  if (argc != 6) {
    std::fprintf(stderr, "usage: make_frames <dir> <width> <height> <band> <frames>\n");
    return 1;
  }
  const std::string dir = argv[1];
  const int w = std::atoi(argv[2]);
  const int h = std::atoi(argv[3]);
  const int band = std::atoi(argv[4]);
  const int n = std::atoi(argv[5]);
  for (int f = 0; f < n; ++f) {
    std::vector<unsigned char> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
    for (int y = band; y < h - band; ++y) {
      for (int x = 0; x < w; ++x) {
        const int cell = (x * 4 / w) + 4 * ((y - band) * 3 / (h - 2 * band));
        px[static_cast<std::size_t>(y) * w + x] = static_cast<unsigned char>(80 + (37 * cell + 53 * f) % 150);
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "/frame_%03d.pgm", f);
    std::ofstream out(dir + name, std::ios::binary);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) return 2;
  }
  return 0;
}
