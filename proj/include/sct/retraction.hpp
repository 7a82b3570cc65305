// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0
//
// Stiefel retraction: after an optimizer step pulls u and v off the
// manifold, thin QR maps them back. qr_thin already absorbs the diagonal
// signs of r into q, so the retraction with sign correction is exactly q,
// and points already on the manifold are fixed points.

#pragma once

#include <cstdint>
#include <string>

#include "sct/qr.hpp"
#include "sct/spectral.hpp"

namespace sct {

/// Post-retraction orthonormality errors for one layer.
struct OrthoReport {
  std::string layer_id;
  double err_u = 0.0;       // max |(u^T u - I)_ij|
  double err_v = 0.0;
  std::int64_t timestamp_step = 0;
};

/// Q * sign(diag(R)) of the thin QR. Output has orthonormal columns and the
/// same column space as the input; orthonormal inputs are returned unchanged
/// up to roundoff.
template <typename T>
DenseMatrix<T> retract_qr(const DenseMatrix<T>& mat) {
  return qr_thin(mat).q;
}

/// Retracts u and v in place (s is not touched) and reports the residual
/// orthonormality errors. DegenerateColumnError from a rank-deficient factor
/// propagates with the layer id attached; recovery is the caller's call.
template <typename T>
OrthoReport retract_layer(SpectralFactors<T>& f, const std::string& layer_id,
                          std::int64_t step = 0) {
  try {
    f.u = retract_qr(f.u);
    f.v = retract_qr(f.v);
  } catch (const DegenerateColumnError& e) {
    throw DegenerateColumnError("layer " + layer_id + ": " + e.what(),
                                e.column());
  }
  return OrthoReport{layer_id, ortho_error(f.u), ortho_error(f.v), step};
}

}  // namespace sct
