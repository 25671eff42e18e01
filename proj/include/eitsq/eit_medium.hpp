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

// Phenomenological transparency window T(nu) of the EIT medium, tabulated
// transmission data, window fitting and the analytic lossy-squeezing
// noise spectrum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "eitsq/error.hpp"
#include "eitsq/gaussian_optics.hpp"
#include "eitsq/noise_spectrum.hpp"

namespace eitsq {

/// Lorentzian transparency window on a flat background.
struct WindowModel {
    double t_peak = 0.9;
    double t_bg = 0.02;
    double gamma_hwhm = 300e3;
    double delta0 = 0.0;

    void validate() const {
        if (!(std::isfinite(t_peak) && std::isfinite(t_bg) && std::isfinite(gamma_hwhm) && std::isfinite(delta0))) {
            fail(ErrorKind::invalid_argument, "window model parameters must be finite");
        }
        if (!(0.0 <= t_bg && t_bg <= t_peak && t_peak <= 1.0)) {
            fail(ErrorKind::invalid_argument, "window model requires 0 <= t_bg <= t_peak <= 1");
        }
        if (!(gamma_hwhm > 0.0)) {
            fail(ErrorKind::invalid_argument, "window half width must be > 0");
        }
    }
};

inline double transmission(const WindowModel &model, double nu) {
    const double g2 = model.gamma_hwhm * model.gamma_hwhm;
    const double d = nu - model.delta0;
    return model.t_bg + (model.t_peak - model.t_bg) * g2 / (g2 + d * d);
}

struct TransmissionRow {
    double detuning = 0.0;
    double transmittance = 0.0;
};

/// Measured transmission versus signed two-photon detuning (Hz).
class TransmissionTable {
   public:
    explicit TransmissionTable(std::vector<TransmissionRow> rows) : rows_(std::move(rows)) {
        if (rows_.size() < 2) {
            fail(ErrorKind::invalid_argument, "transmission table needs at least 2 rows");
        }
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const auto &row = rows_[i];
            if (!std::isfinite(row.detuning) || !std::isfinite(row.transmittance)) {
                fail(ErrorKind::invalid_argument, "transmission table has non-finite entries");
            }
            if (row.transmittance < 0.0 || row.transmittance > 1.0) {
                fail(ErrorKind::invalid_argument, "transmittance outside [0, 1] at row " + std::to_string(i + 1));
            }
            if (i > 0 && row.detuning <= rows_[i - 1].detuning) {
                fail(ErrorKind::invalid_argument, "detunings must be strictly increasing (row " +
                                                      std::to_string(i + 1) + ")");
            }
        }
    }

    const std::vector<TransmissionRow> &rows() const noexcept {
        return rows_;
    }
    std::size_t size() const noexcept {
        return rows_.size();
    }

   private:
    std::vector<TransmissionRow> rows_;
};

inline double transmission_lookup(const TransmissionTable &table, double nu) {
    const auto &rows = table.rows();
    if (nu <= rows.front().detuning) {
        return rows.front().transmittance;
    }
    if (nu >= rows.back().detuning) {
        return rows.back().transmittance;
    }
    const auto hi = std::upper_bound(rows.begin(), rows.end(), nu,
                                     [](double v, const TransmissionRow &row) { return v < row.detuning; });
    const auto lo = hi - 1;
    if (lo->detuning == nu) {
        return lo->transmittance;
    }
    const double frac = (nu - lo->detuning) / (hi->detuning - lo->detuning);
    return lo->transmittance + frac * (hi->transmittance - lo->transmittance);
}

/// CSV with header `detuning_hz,transmittance`. `source` names the input in
/// error messages.
inline TransmissionTable parse_transmission_csv(std::istream &in, const std::string &source = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorKind::format, source + ": empty transmission file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) {
        line.erase(0, 3);
    }
    if (line != "detuning_hz,transmittance") {
        fail(ErrorKind::format, source + ": expected header 'detuning_hz,transmittance'");
    }
    std::vector<TransmissionRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            fail(ErrorKind::format, source + ":" + std::to_string(line_no) + ": expected two fields");
        }
        try {
            std::size_t used_a = 0;
            std::size_t used_b = 0;
            const std::string a = line.substr(0, comma);
            const std::string b = line.substr(comma + 1);
            TransmissionRow row{std::stod(a, &used_a), std::stod(b, &used_b)};
            if (used_a != a.size() || used_b != b.size()) {
                throw std::invalid_argument("trailing characters");
            }
            rows.push_back(row);
        } catch (const std::logic_error &) {
            fail(ErrorKind::format, source + ":" + std::to_string(line_no) + ": malformed number");
        }
    }
    try {
        return TransmissionTable(std::move(rows));
    } catch (const Error &e) {
        fail(ErrorKind::format, source + ": " + e.what());
    }
}

inline TransmissionTable read_transmission_csv(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, path + ": cannot open transmission file");
    }
    return parse_transmission_csv(in, path);
}

inline std::string format_transmission_csv(const TransmissionTable &table) {
    std::ostringstream out;
    out.precision(17);
    out << "detuning_hz,transmittance\n";
    for (const auto &row : table.rows()) {
        out << row.detuning << ',' << row.transmittance << '\n';
    }
    return out.str();
}

using TransmissionSource = std::variant<WindowModel, TransmissionTable>;

/// T at signed detuning nu.
inline double transmission_at(const TransmissionSource &source, double nu) {
    return std::visit(
        [nu](const auto &s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, WindowModel>) {
                return transmission(s, nu);
            } else {
                return transmission_lookup(s, nu);
            }
        },
        source);
}

/// Mean of the transmission at detunings +nu and -nu.
inline double symmetrized_transmission(const TransmissionSource &source, double nu) {
    if (!(nu >= 0.0)) {
        fail(ErrorKind::domain, "symmetrized transmission needs nu >= 0");
    }
    return 0.5 * (transmission_at(source, nu) + transmission_at(source, -nu));
}

// ---------------------------------------------------------------------------
// Fitting

struct FitOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-12;
    double cost_tolerance = 1e-15;
};

struct FitReport {
    WindowModel model;
    double residual_rms = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// NonConvergence carries the best parameters found.
class FitError : public Error {
   public:
    FitError(const std::string &message, FitReport best)
        : Error(ErrorKind::non_convergence, message), best_(std::move(best)) {
    }
    const FitReport &best() const noexcept {
        return best_;
    }

   private:
    FitReport best_;
};

/// Heuristic starting point: background = min, peak = max, center = argmax,
/// half width from the half-height crossings around the maximum.
inline WindowModel initial_window_guess(const TransmissionTable &table) {
    const auto &rows = table.rows();
    const auto by_t = [](const TransmissionRow &a, const TransmissionRow &b) {
        return a.transmittance < b.transmittance;
    };
    const auto max_it = std::max_element(rows.begin(), rows.end(), by_t);
    const auto min_it = std::min_element(rows.begin(), rows.end(), by_t);
    WindowModel guess;
    guess.t_peak = max_it->transmittance;
    guess.t_bg = min_it->transmittance;
    guess.delta0 = max_it->detuning;

    const double half = 0.5 * (guess.t_peak + guess.t_bg);
    const std::size_t peak = static_cast<std::size_t>(max_it - rows.begin());
    const auto crossing = [&](std::size_t a, std::size_t b) {
        const double frac = (rows[a].transmittance - half) / (rows[a].transmittance - rows[b].transmittance);
        return rows[a].detuning + frac * (rows[b].detuning - rows[a].detuning);
    };
    std::optional<double> left;
    std::optional<double> right;
    for (std::size_t i = peak; i > 0; --i) {
        if (rows[i - 1].transmittance <= half) {
            left = crossing(i, i - 1);
            break;
        }
    }
    for (std::size_t i = peak; i + 1 < rows.size(); ++i) {
        if (rows[i + 1].transmittance <= half) {
            right = crossing(i, i + 1);
            break;
        }
    }
    const double span = rows.back().detuning - rows.front().detuning;
    if (left && right) {
        guess.gamma_hwhm = 0.5 * (*right - *left);
    } else if (left) {
        guess.gamma_hwhm = guess.delta0 - *left;
    } else if (right) {
        guess.gamma_hwhm = *right - guess.delta0;
    } else {
        guess.gamma_hwhm = 0.25 * span;
    }
    if (!(guess.gamma_hwhm > 0.0)) {
        guess.gamma_hwhm = 0.25 * span;
    }
    return guess;
}

namespace detail {

// Parameters are (t_peak, t_bg, gamma / scale, delta0 / scale).
inline void project_window_params(Eigen::Vector4d &p) {
    p(0) = std::clamp(p(0), 0.0, 1.0);
    p(1) = std::clamp(p(1), 0.0, 1.0);
    if (p(1) > p(0)) {
        const double mid = 0.5 * (p(0) + p(1));
        p(0) = p(1) = mid;
    }
    p(2) = std::max(p(2), 1e-9);
}

inline double window_residuals(const TransmissionTable &table, const Eigen::Vector4d &p, double scale,
                               Eigen::VectorXd &res, Eigen::MatrixXd *jac) {
    const auto &rows = table.rows();
    const double g = p(2);
    const double g2 = g * g;
    const double amp = p(0) - p(1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Eigen::Index row = static_cast<Eigen::Index>(i);
        const double d = rows[i].detuning / scale - p(3);
        const double den = g2 + d * d;
        const double lor = g2 / den;
        res(row) = p(1) + amp * lor - rows[i].transmittance;
        if (jac != nullptr) {
            (*jac)(row, 0) = lor;
            (*jac)(row, 1) = 1.0 - lor;
            (*jac)(row, 2) = amp * 2.0 * g * d * d / (den * den);
            (*jac)(row, 3) = amp * 2.0 * g2 * d / (den * den);
        }
    }
    return res.squaredNorm();
}

}  // namespace detail

/// Levenberg-Marquardt least-squares fit of the four window parameters.
inline FitReport fit_window(const TransmissionTable &table, std::optional<WindowModel> initial_guess = std::nullopt,
                            const FitOptions &options = {}) {
    const auto &rows = table.rows();
    double t_min = rows.front().transmittance;
    double t_max = t_min;
    for (const auto &row : rows) {
        t_min = std::min(t_min, row.transmittance);
        t_max = std::max(t_max, row.transmittance);
    }
    if (t_max - t_min < 1e-6) {
        fail(ErrorKind::degenerate, "transmission table is flat; no window to fit");
    }
    if (rows.size() < 4) {
        fail(ErrorKind::degenerate, "window fit needs at least 4 rows");
    }

    const WindowModel start = initial_guess.value_or(initial_window_guess(table));
    const double scale = start.gamma_hwhm > 0.0 ? start.gamma_hwhm : 1.0;
    Eigen::Vector4d p(start.t_peak, start.t_bg, start.gamma_hwhm / scale, start.delta0 / scale);
    detail::project_window_params(p);

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd res(n);
    Eigen::VectorXd trial_res(n);
    Eigen::MatrixXd jac(n, 4);
    double cost = detail::window_residuals(table, p, scale, res, &jac);
    double lambda = 1e-3;

    const auto report = [&](const Eigen::Vector4d &q, double c, int iter, bool ok) {
        FitReport out;
        out.model = WindowModel{q(0), q(1), q(2) * scale, q(3) * scale};
        out.residual_rms = std::sqrt(c / static_cast<double>(n));
        out.iterations = iter;
        out.converged = ok;
        return out;
    };

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d grad = jac.transpose() * res;
        if (grad.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + cost)) {
            return report(p, cost, iter, true);
        }
        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::Matrix4d damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            Eigen::Vector4d step = damped.ldlt().solve(-grad);
            Eigen::Vector4d trial = p + step;
            detail::project_window_params(trial);
            step = trial - p;
            const double trial_cost = detail::window_residuals(table, trial, scale, trial_res, nullptr);
            if (trial_cost < cost) {
                const double reduction = cost - trial_cost;
                p = trial;
                cost = detail::window_residuals(table, p, scale, res, &jac);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                const bool small_step =
                    step.norm() <= options.step_tolerance * (p.norm() + options.step_tolerance);
                if (small_step || reduction <= options.cost_tolerance * cost) {
                    return report(p, cost, iter, true);
                }
                break;
            }
            if (step.norm() <= options.step_tolerance * (p.norm() + options.step_tolerance)) {
                // No downhill step at any damping that moves the parameters.
                return report(p, cost, iter, true);
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            return report(p, cost, iter, true);
        }
    }
    throw FitError("window fit did not converge after " + std::to_string(options.max_iterations) + " iterations",
                   report(p, cost, options.max_iterations, false));
}

// ---------------------------------------------------------------------------
// Analytic noise spectrum

/// How the medium's transmission enters the loss channel.
enum class LossRecipe {
    /// One beam splitter with T = (T(+nu) + T(-nu)) / 2, as in the closed form.
    symmetrized_mean,
    /// Exact channel with T(+nu) on the upper and T(-nu) on the lower sideband.
    per_sideband,
};

/// Sideband phase phi(nu) applied as +phi / -phi to the upper / lower mode.
using SidebandPhaseProfile = std::function<double(double)>;

struct PredictOptions {
    LossRecipe recipe = LossRecipe::symmetrized_mean;
    /// Lorentzian roll-off of the input squeezing, r(nu) = r / (1 + (nu/B)^2).
    /// Zero disables it (flat input squeezing).
    double opo_bandwidth_hz = 0.0;
    SidebandPhaseProfile sideband_phase;
};

inline double input_squeezing(double r, double nu, double opo_bandwidth_hz) {
    if (opo_bandwidth_hz <= 0.0) {
        return r;
    }
    const double x = nu / opo_bandwidth_hz;
    return r / (1.0 + x * x);
}

/// Quadrature variance at sideband frequency nu >= 0.
inline double predict_variance(double r, double theta, const TransmissionSource &source, double nu,
                               const PredictOptions &options = {}) {
    if (!(nu >= 0.0)) {
        fail(ErrorKind::domain, "prediction frequencies must be >= 0");
    }
    const double r_nu = input_squeezing(r, nu, options.opo_bandwidth_hz);
    if (options.recipe == LossRecipe::symmetrized_mean && !options.sideband_phase) {
        return eq5_variance(r_nu, theta, symmetrized_transmission(source, nu)).value;
    }
    TwoModeGaussianState state = tmsv_state(r_nu);
    if (options.sideband_phase) {
        state = apply_sideband_phase(state, options.sideband_phase(nu));
    }
    if (options.recipe == LossRecipe::symmetrized_mean) {
        const double t = symmetrized_transmission(source, nu);
        state = apply_loss(state, t, t);
    } else {
        state = apply_loss(state, transmission_at(source, nu), transmission_at(source, -nu));
    }
    return quadrature_variance(state, theta, nu).value;
}

inline NoiseSpectrum predict_noise_spectrum(double r, double theta, const TransmissionSource &source,
                                            const std::vector<double> &freqs, const PredictOptions &options = {}) {
    if (const auto *model = std::get_if<WindowModel>(&source)) {
        model->validate();
    }
    NoiseSpectrum out;
    out.scale = SpectrumScale::absolute;
    out.freqs = freqs;
    out.power.reserve(freqs.size());
    for (double nu : freqs) {
        out.power.push_back(predict_variance(r, theta, source, nu, options));
    }
    out.validate();
    return out;
}

}  // namespace eitsq
