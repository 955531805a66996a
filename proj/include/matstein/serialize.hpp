#pragma once

#include "matstein/distributions.hpp"
#include "matstein/ou.hpp"

#include <string>

namespace matstein {

/// Flat binary batch layout: header of four little-endian uint64
/// (count, nu, d, seed), then count * nu * d little-endian doubles, one
/// row-major sample after another (row k = vec(X_k^T)).
void save_batch_binary(const SampleBatch& batch, const std::string& path);
SampleBatch load_batch_binary(const std::string& path);

/// CSV with one vectorized sample per row in vec(X^T) column order; header
/// row x_<i>_<j>.
void save_batch_csv(const SampleBatch& batch, const std::string& path);

/// CSV path export with columns time, entry_11, ..., entry_<nu><d>.
void save_path_csv(const OUPath& path, int nu, int d, const std::string& out_path);

/// Shortest round-trip decimal form, stable across runs.
std::string format_double(double v);

}  // namespace matstein
