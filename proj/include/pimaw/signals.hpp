#pragma once

#include <complex>
#include <variant>
#include <vector>

#include "pimaw/core.hpp"

namespace pimaw {

/// b_i(t) = H_row exp(F t) xi_i(0), evaluated in closed form.
///
/// Each component solves d(D) b_i = 0 with initial derivatives given by the
/// companion state xi_i(0) = (b_i, b_i', ..., b_i^(m-1)) at t = 0, so b_i is a
/// combination of t^k exp(r t) over the roots r of d(s). The combination
/// weights come from a confluent Vandermonde solve done once at construction.
class ExosystemSignal {
   public:
    ExosystemSignal(ExosystemModel model, Mat xi0);  // xi0 is m x n, column i = xi_i(0)

    Vec operator()(double t) const;
    const ExosystemModel& model() const { return model_; }
    const Mat& xi0() const { return xi0_; }
    int n() const { return static_cast<int>(xi0_.cols()); }

   private:
    struct Mode {
        std::complex<double> root;
        int power;
    };
    ExosystemModel model_;
    Mat xi0_;
    std::vector<Mode> modes_;
    Eigen::MatrixXcd weights_;  // modes x n
};

/// Zero-mean triangle: 0 at phase 0, peak +amplitude a quarter period later.
struct TriangularWave {
    Vec amplitude;
    Vec period;
    Vec phase;  // radians

    Vec operator()(double t) const;
    int n() const { return static_cast<int>(amplitude.size()); }
};

/// amp_i sin(omega t + phase_i) + offset_i.
struct SinusoidPlusConstant {
    Vec amp;
    double omega = 0.0;
    Vec phase;
    Vec offset;

    Vec operator()(double t) const;
    int n() const { return static_cast<int>(amp.size()); }
};

using SignalSource = std::variant<ExosystemSignal, TriangularWave, SinusoidPlusConstant>;

Vec b_of_t(const SignalSource& source, double t);
int signal_dimension(const SignalSource& source);

/// Single scalar triangle value, shared by TriangularWave.
double triangle(double t, double amplitude, double period, double phase);

}  // namespace pimaw
