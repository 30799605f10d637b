#include "pimaw/signals.hpp"

#include <cmath>
#include <numbers>

namespace pimaw {

namespace {

std::complex<double> ipow(std::complex<double> r, int e) {
    std::complex<double> out{1.0, 0.0};
    for (int i = 0; i < e; ++i) out *= r;
    return out;
}

}  // namespace

ExosystemSignal::ExosystemSignal(ExosystemModel model, Mat xi0) : model_(std::move(model)), xi0_(std::move(xi0)) {
    const int m = model_.m;
    require_dims(xi0_.rows() == m && xi0_.cols() >= 1, "ExosystemSignal: xi0 must be m x n");
    for (const auto& r : model_.roots)
        for (int k = 0; k < r.multiplicity; ++k) modes_.push_back({r.value, k});
    require_dims(static_cast<int>(modes_.size()) == m, "ExosystemSignal: root multiplicities do not sum to m");

    // Row p: p-th derivative at t = 0 of every mode t^k e^{r t}, which is
    // p! / (p - k)! r^(p - k) for p >= k and 0 otherwise.
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        const auto [r, k] = modes_[static_cast<size_t>(j)];
        for (int p = k; p < m; ++p) {
            double falling = 1.0;
            for (int q = 0; q < k; ++q) falling *= static_cast<double>(p - q);
            D(p, j) = falling * ipow(r, p - k);
        }
    }
    weights_ = D.fullPivLu().solve(xi0_.cast<std::complex<double>>());
}

Vec ExosystemSignal::operator()(double t) const {
    Eigen::RowVectorXcd basis(static_cast<Eigen::Index>(modes_.size()));
    for (size_t j = 0; j < modes_.size(); ++j) {
        const auto [r, k] = modes_[j];
        basis(static_cast<Eigen::Index>(j)) = std::pow(t, k) * std::exp(r * t);
    }
    return (basis * weights_).real().transpose();
}

double triangle(double t, double amplitude, double period, double phase) {
    const double s = t / period + phase / (2.0 * std::numbers::pi);
    const double f = s - std::floor(s);
    if (f < 0.25) return 4.0 * amplitude * f;
    if (f < 0.75) return amplitude * (2.0 - 4.0 * f);
    return amplitude * (4.0 * f - 4.0);
}

Vec TriangularWave::operator()(double t) const {
    Vec b(amplitude.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = triangle(t, amplitude(i), period(i), phase(i));
    return b;
}

Vec SinusoidPlusConstant::operator()(double t) const {
    return (amp.array() * (omega * t + phase.array()).sin() + offset.array()).matrix();
}

Vec b_of_t(const SignalSource& source, double t) {
    return std::visit([t](const auto& s) -> Vec { return s(t); }, source);
}

int signal_dimension(const SignalSource& source) {
    return std::visit([](const auto& s) { return s.n(); }, source);
}

}  // namespace pimaw
