#pragma once

#include <cstdint>
#include <filesystem>

#include "mbo/grid.hpp"

namespace mbo {

// Snapshot format: a text sidecar header `<stem>.hdr` with key=value lines
//   format=labels-u8 | scalar-f64le
//   dim=2
//   sizes=512 512
//   N=3
//   step=120
//   time=0.0024
//   payload=<stem>.bin
// and a raw payload `<stem>.bin`, row-major with axis 0 slowest. Labels are
// one unsigned byte per cell, scalars little-endian IEEE-754 doubles.

struct SnapshotInfo {
  GridSpec grid;
  int num_phases = 0;
  std::int64_t step = 0;
  double time = 0.0;
};

struct LabelSnapshot {
  LabelField labels;
  std::int64_t step = 0;
  double time = 0.0;
};

struct ScalarSnapshot {
  ScalarField field;
  int num_phases = 0;
  std::int64_t step = 0;
  double time = 0.0;
};

/// Writes `<stem>.hdr` and `<stem>.bin`. Returns the header path.
std::filesystem::path write_labels(const std::filesystem::path& stem, const LabelField& labels,
                                   std::int64_t step, double time);
std::filesystem::path write_scalar(const std::filesystem::path& stem, const ScalarField& field, int num_phases,
                                   std::int64_t step, double time);

/// Accepts either the header path or the stem.
LabelSnapshot read_labels(const std::filesystem::path& path);
ScalarSnapshot read_scalar(const std::filesystem::path& path);

/// 8-bit PGM, one evenly spaced gray level per phase. 2D fields only; 3D
/// fields export the slice at axis-0 index `slice`.
void write_pgm(const std::filesystem::path& path, const LabelField& labels, int slice = 0);

}  // namespace mbo
