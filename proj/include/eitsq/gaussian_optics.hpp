// Copyright 2026 The eitsq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Two-mode Gaussian-state calculus for a sideband pair at nu0 +/- nu.
//
// Quadrature ordering is (x+, p+, x-, p-) with a = x + i p, so the vacuum
// covariance is 0.25 * identity ("shot-noise units"). The measured
// quadrature is X(nu, theta) / 2 with
//
//     X(nu, theta) = a+ exp(-i theta) + a-^dagger exp(i theta),
//
// which makes the vacuum variance exactly 0.25 and reproduces the lossy
// squeezed-vacuum formula without any scale factor.

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "eitsq/error.hpp"

namespace eitsq {

using Matrix4 = Eigen::Matrix4d;
using Vector4 = Eigen::Vector4d;

inline constexpr double kShotNoiseVariance = 0.25;

struct Tolerances {
    double symmetry = 1e-12;
    double eigenvalue = 1e-9;
};

/// Symplectic form scaled to the vacuum = 0.25 convention, i.e. the matrix
/// of commutators [R_j, R_k] / i for R = (x+, p+, x-, p-).
inline Matrix4 commutator_form() {
    Matrix4 omega = Matrix4::Zero();
    omega(0, 1) = 0.5;
    omega(1, 0) = -0.5;
    omega(2, 3) = 0.5;
    omega(3, 2) = -0.5;
    return omega;
}

/// Eigenvalues of the Hermitian matrix cov + (i/2) * commutator_form(). The
/// state is physical iff all of them are non-negative.
inline Eigen::Vector4d uncertainty_eigenvalues(const Matrix4 &cov) {
    const Eigen::Matrix4cd m = cov.cast<std::complex<double>>() +
                               std::complex<double>(0.0, 0.5) * commutator_form().cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

class TwoModeGaussianState {
   public:
    /// Validates symmetry and the uncertainty relation.
    static TwoModeGaussianState from_covariance(const Matrix4 &cov, const Vector4 &mean = Vector4::Zero(),
                                                const Tolerances &tol = {}) {
        if (!cov.allFinite() || !mean.allFinite()) {
            fail(ErrorKind::invalid_argument, "covariance or mean has non-finite entries");
        }
        if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > tol.symmetry) {
            fail(ErrorKind::invalid_argument, "covariance matrix is not symmetric");
        }
        if (uncertainty_eigenvalues(cov).minCoeff() < -tol.eigenvalue) {
            fail(ErrorKind::invalid_argument, "covariance matrix violates the uncertainty relation");
        }
        return TwoModeGaussianState(cov, mean);
    }

    static TwoModeGaussianState vacuum() {
        return TwoModeGaussianState(kShotNoiseVariance * Matrix4::Identity(), Vector4::Zero());
    }

    const Matrix4 &cov() const noexcept {
        return cov_;
    }
    const Vector4 &mean() const noexcept {
        return mean_;
    }

    bool satisfies_uncertainty(double tol = Tolerances{}.eigenvalue) const {
        return uncertainty_eigenvalues(cov_).minCoeff() >= -tol;
    }

   private:
    TwoModeGaussianState(Matrix4 cov, Vector4 mean) : cov_(std::move(cov)), mean_(std::move(mean)) {
    }

    friend TwoModeGaussianState tmsv_state(double r);
    friend TwoModeGaussianState apply_sideband_phase(const TwoModeGaussianState &state, double phi);
    friend TwoModeGaussianState apply_loss(const TwoModeGaussianState &state, double t_plus, double t_minus);

    Matrix4 cov_;
    Vector4 mean_;
};

struct QuadratureVariance {
    double value = kShotNoiseVariance;
    double theta = 0.0;
    double nu = 0.0;
};

/// Pure two-mode squeezed vacuum. theta = 0 is the squeezed quadrature.
inline TwoModeGaussianState tmsv_state(double r) {
    if (!std::isfinite(r) || r < 0.0) {
        fail(ErrorKind::domain, "squeezing parameter must be finite and >= 0");
    }
    const double c = kShotNoiseVariance * std::cosh(2.0 * r);
    const double s = kShotNoiseVariance * std::sinh(2.0 * r);
    Matrix4 cov = c * Matrix4::Identity();
    // x+ x- anti-correlated, p+ p- correlated: x+ + x- and p+ - p- are squeezed.
    cov(0, 2) = cov(2, 0) = -s;
    cov(1, 3) = cov(3, 1) = s;
    return TwoModeGaussianState(cov, Vector4::Zero());
}

/// Symmetrically ordered variance of X(nu, theta) / 2.
inline QuadratureVariance quadrature_variance(const TwoModeGaussianState &state, double theta, double nu = 0.0) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // X = u + i w with u, w Hermitian; <X X^+ + X^+ X>/2 = <u^2> + <w^2>.
    const Vector4 u(c, s, c, s);
    const Vector4 w(-s, c, s, -c);
    const Matrix4 &v = state.cov();
    const double sym = u.dot(v * u) + w.dot(v * w);
    return {0.25 * sym, theta, nu};
}

/// Phase +phi on the upper sideband and -phi on the lower one.
inline TwoModeGaussianState apply_sideband_phase(const TwoModeGaussianState &state, double phi) {
    if (!std::isfinite(phi)) {
        fail(ErrorKind::domain, "sideband phase must be finite");
    }
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    Matrix4 rot = Matrix4::Zero();
    rot.block<2, 2>(0, 0) << c, -s, s, c;
    rot.block<2, 2>(2, 2) << c, s, -s, c;
    Matrix4 cov = rot * state.cov_ * rot.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    return TwoModeGaussianState(cov, rot * state.mean_);
}

/// Each sideband mixed with vacuum on a beam splitter of intensity
/// transmittance t_plus (upper) and t_minus (lower).
inline TwoModeGaussianState apply_loss(const TwoModeGaussianState &state, double t_plus, double t_minus) {
    const auto in_unit = [](double t) { return std::isfinite(t) && t >= 0.0 && t <= 1.0; };
    if (!in_unit(t_plus) || !in_unit(t_minus)) {
        fail(ErrorKind::domain, "transmittance must lie in [0, 1]");
    }
    const Vector4 amp(std::sqrt(t_plus), std::sqrt(t_plus), std::sqrt(t_minus), std::sqrt(t_minus));
    const Vector4 added(1.0 - t_plus, 1.0 - t_plus, 1.0 - t_minus, 1.0 - t_minus);
    Matrix4 cov = amp.asDiagonal() * state.cov_ * amp.asDiagonal();
    cov.diagonal() += kShotNoiseVariance * added;
    return TwoModeGaussianState(cov, amp.cwiseProduct(state.mean_));
}

/// Closed-form variance of a squeezed vacuum after symmetric loss T.
inline QuadratureVariance eq5_variance(double r, double theta, double transmittance) {
    if (!std::isfinite(r) || r < 0.0) {
        fail(ErrorKind::domain, "squeezing parameter must be finite and >= 0");
    }
    if (!std::isfinite(transmittance) || transmittance < 0.0 || transmittance > 1.0) {
        fail(ErrorKind::domain, "transmittance must lie in [0, 1]");
    }
    const double pure = std::cosh(2.0 * r) - std::cos(2.0 * theta) * std::sinh(2.0 * r);
    return {0.25 * (transmittance * pure + (1.0 - transmittance)), theta, 0.0};
}

/// Variance relative to shot noise, in dB.
inline double variance_to_db(double variance) {
    return 10.0 * std::log10(variance / kShotNoiseVariance);
}

/// Squeezing given as dB below shot noise (sign ignored) to r.
inline double squeezing_db_to_r(double db) {
    return std::log(std::pow(10.0, std::abs(db) / 20.0));
}

}  // namespace eitsq
