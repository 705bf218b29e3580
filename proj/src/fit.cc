// Copyright 2026 The fairsample Authors
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

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <limits>

#include "fairsample/estimator.h"

namespace fairsample {

const char *to_string(FitModel m) {
    switch (m) {
        case FitModel::Constant:
            return "constant";
        case FitModel::Linear:
            return "linear";
        case FitModel::Cosine:
            return "cosine";
    }
    return "?";
}

double FitReport::amplitude_significance() const {
    if (model != FitModel::Cosine) {
        return 0;
    }
    if (amplitude_sigma > 0) {
        return amplitude / amplitude_sigma;
    }
    return amplitude > 0 ? std::numeric_limits<double>::infinity() : 0;
}

namespace {

// Below this both chi-squares are treated as exactly zero (noiseless data).
constexpr double kChi2Floor = 1e-20;

int n_params(FitModel m) {
    switch (m) {
        case FitModel::Constant:
            return 1;
        case FitModel::Linear:
            return 2;
        case FitModel::Cosine:
            return 3;
    }
    return 0;
}

void basis(FitModel m, double x, double *row) {
    row[0] = 1;
    if (m == FitModel::Linear) {
        row[1] = x;
    } else if (m == FitModel::Cosine) {
        row[1] = std::cos(2 * x);
        row[2] = std::sin(2 * x);
    }
}

}  // namespace

FitReport fit_model(FitModel model, std::span<const double> x, std::span<const double> y,
                    std::span<const double> sigma) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const int k = n_params(model);
    if (y.size() != x.size() || sigma.size() != x.size()) {
        throw EstimatorError(EstimatorError::Kind::InvalidScan, "x, y and sigma lengths differ");
    }
    if (n <= k) {
        throw EstimatorError(EstimatorError::Kind::InsufficientPoints,
                             std::string(to_string(model)) + " fit needs more than " + std::to_string(k) +
                                 " points, got " + std::to_string(n));
    }

    Eigen::MatrixXd design(n, k);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; i++) {
        const double s = sigma[i];
        if (!(s > 0) || !std::isfinite(s) || !std::isfinite(y[i]) || !std::isfinite(x[i])) {
            throw EstimatorError(EstimatorError::Kind::DegenerateWeights,
                                 "point " + std::to_string(i) + " has no usable value or uncertainty");
        }
        double row[3];
        basis(model, x[i], row);
        for (int j = 0; j < k; j++) {
            design(i, j) = row[j] / s;
        }
        rhs(i) = y[i] / s;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < k) {
        throw EstimatorError(EstimatorError::Kind::DegenerateWeights,
                             std::string(to_string(model)) + " design matrix is rank deficient");
    }
    const Eigen::VectorXd beta = qr.solve(rhs);
    const Eigen::MatrixXd cov = (design.transpose() * design).inverse();

    FitReport r;
    r.model = model;
    r.dof = static_cast<int>(n) - k;
    r.chi2 = (design * beta - rhs).squaredNorm();
    r.f_stat = std::numeric_limits<double>::quiet_NaN();
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    for (int j = 0; j < k; j++) {
        r.params.push_back(beta(j));
        r.param_sigma.push_back(std::sqrt(cov(j, j)));
    }
    if (model == FitModel::Cosine) {
        const double a = beta(1);
        const double b = beta(2);
        r.amplitude = std::hypot(a, b);
        r.phase = std::atan2(-b, a);
        if (r.amplitude > 0) {
            const double ga = a / r.amplitude;
            const double gb = b / r.amplitude;
            r.amplitude_sigma = std::sqrt(ga * ga * cov(1, 1) + 2 * ga * gb * cov(1, 2) + gb * gb * cov(2, 2));
        } else {
            r.amplitude_sigma = std::sqrt(0.5 * (cov(1, 1) + cov(2, 2)));
        }
    }
    return r;
}

void compare_to_constant(const FitReport &constant, FitReport &richer) {
    const int extra = static_cast<int>(richer.params.size()) - 1;
    if (constant.model != FitModel::Constant || extra <= 0 || richer.dof <= 0) {
        throw EstimatorError(EstimatorError::Kind::InvalidScan, "F-test needs a Constant fit and a richer model");
    }
    const double gain = std::max(0.0, constant.chi2 - richer.chi2);
    if (richer.chi2 <= kChi2Floor) {
        if (gain <= kChi2Floor) {
            richer.degenerate = true;
            richer.f_stat = 0;
            richer.p_value = 1;
        } else {
            richer.f_stat = std::numeric_limits<double>::infinity();
            richer.p_value = 0;
        }
        return;
    }
    richer.f_stat = (gain / extra) / (richer.chi2 / richer.dof);
    const boost::math::fisher_f_distribution<double> dist(extra, richer.dof);
    richer.p_value = boost::math::cdf(boost::math::complement(dist, richer.f_stat));
}

NoSignallingReport nosignalling_stats(const ScanResult &scan, VariedSetting varied, double alpha_level) {
    if (!(alpha_level > 0 && alpha_level < 1)) {
        throw EstimatorError(EstimatorError::Kind::InvalidScan, "significance level must lie in (0, 1)");
    }
    const size_t n = scan.points.size();
    if (n < kMinScanPoints) {
        throw EstimatorError(EstimatorError::Kind::InsufficientPoints,
                             "no-signalling fits need at least " + std::to_string(kMinScanPoints) + " points, got " +
                                 std::to_string(n));
    }
    const auto varied_of = [&](const ScanPoint &p) { return varied == VariedSetting::Alpha ? p.alpha : p.beta; };
    const auto fixed_of = [&](const ScanPoint &p) { return varied == VariedSetting::Alpha ? p.beta : p.alpha; };
    bool any_change = false;
    for (const auto &p : scan.points) {
        if (std::abs(fixed_of(p) - fixed_of(scan.points.front())) > 1e-9) {
            throw EstimatorError(EstimatorError::Kind::InvalidScan, "more than one setting varies across the scan");
        }
        any_change |= std::abs(varied_of(p) - varied_of(scan.points.front())) > 1e-9;
    }
    if (!any_change) {
        throw EstimatorError(EstimatorError::Kind::InvalidScan, "the varied setting is constant across the scan");
    }

    NoSignallingReport rep;
    rep.varied = varied;
    rep.alpha_level = alpha_level;
    rep.n_points = n;
    rep.distant = varied == VariedSetting::Alpha ? Station::Bob : Station::Alice;

    std::vector<double> x(n), y(n), s(n);
    bool first_distant = true;
    for (size_t m = 0; m < 4; m++) {
        const MarginalSum which = kMarginalSums[m];
        for (size_t i = 0; i < n; i++) {
            x[i] = varied_of(scan.points[i]);
            y[i] = scan.points[i].est.marginals.at(which);
            s[i] = scan.points[i].est.sigma.marginals.at(which);
        }
        MarginalFits &fits = rep.fits[m];
        fits.which = which;
        fits.constant = fit_model(FitModel::Constant, x, y, s);
        fits.linear = fit_model(FitModel::Linear, x, y, s);
        fits.cosine = fit_model(FitModel::Cosine, x, y, s);
        compare_to_constant(fits.constant, fits.linear);
        compare_to_constant(fits.constant, fits.cosine);

        if (station_of(which) == rep.distant) {
            if (fits.cosine.p_value < alpha_level) {
                rep.distant_consistent = false;
            }
            if (first_distant || fits.cosine.p_value < rep.distant_p_value) {
                rep.distant_p_value = fits.cosine.p_value;
                rep.distant_amplitude = fits.cosine.amplitude;
                rep.distant_significance = fits.cosine.amplitude_significance();
                first_distant = false;
            }
        }
    }
    return rep;
}

}  // namespace fairsample
