#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pimaw {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

// Input rejected before any computation (shape, symmetry, range).
class InvalidInput : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidInput {
   public:
    using InvalidInput::InvalidInput;
};

class AsymmetricMatrix : public InvalidInput {
   public:
    AsymmetricMatrix(const std::string& what, double asymmetry) : InvalidInput(what), asymmetry_(asymmetry) {}
    double asymmetry() const { return asymmetry_; }

   private:
    double asymmetry_;
};

class NotOrthogonal : public InvalidInput {
   public:
    NotOrthogonal(const std::string& what, double deviation) : InvalidInput(what), deviation_(deviation) {}
    double deviation() const { return deviation_; }

   private:
    double deviation_;
};

// Iterative routine hit its iteration cap.
class NotConverged : public std::runtime_error {
   public:
    NotConverged(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

   private:
    double residual_;
};

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatch(what);
}

}  // namespace pimaw
