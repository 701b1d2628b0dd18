#pragma once

#include <string>
#include <variant>

#include "sinkflow/measures.hpp"

namespace sinkflow::gaussian {

enum class FlowKind {
    SinkhornLocation,
    SinkhornScale,
    FokkerPlanckLocation,
    FokkerPlanckScale,
    MirrorEntropy,
    MirrorPotentialEnergy,
    EuclidQuadratic,
    EuclidQuartic,
    EuclidInverse,
};

struct ClosedFormFlow {
    FlowKind kind;
    double param = 0.0;  // theta for location kinds, eta for scale kinds

    ClosedFormFlow(FlowKind k, double p = 0.0);
    bool is_measure() const;
};

FlowKind parse_kind(const std::string& name);
std::string kind_name(FlowKind k);

// Gaussian marginal for measure-valued kinds, position for the Euclidean ODE kinds
std::variant<GaussianMeasure, double> evaluate(const ClosedFormFlow& flow, double t);
// scalar summary: variance for measure kinds, position for ODE kinds
double evaluate_scalar(const ClosedFormFlow& flow, double t);

double sigma_s2(double eta, double t);
double sigma_f2(double eta, double t);

struct DeficitRatio {
    double lhs;
    double rhs;
};
DeficitRatio deficit_ratio(double eta, double t);

// one explicit Euler step of dx/dt = -F'(x)/u''(x), F = x^2/2
double euclid_mirror_ode_step(FlowKind kind, double x, double dt);
double integrate_euclid(FlowKind kind, double x0, double t_end, double dt);

double lsi_constant_quadratic(double f_hess_min);

double kl(const GaussianMeasure& p, const GaussianMeasure& q);
double w2_squared(const GaussianMeasure& p, const GaussianMeasure& q);

}  // namespace sinkflow::gaussian
