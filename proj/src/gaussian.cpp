#include "sinkflow/gaussian.hpp"

#include <cmath>

namespace sinkflow::gaussian {

ClosedFormFlow::ClosedFormFlow(FlowKind k, double p) : kind(k), param(p) {
    switch (k) {
        case FlowKind::SinkhornLocation:
        case FlowKind::FokkerPlanckLocation:
            if (p == 0.0) throw DomainError("location kinds need theta != 0");
            break;
        case FlowKind::SinkhornScale:
        case FlowKind::FokkerPlanckScale:
            if (!(p > 0.0 && p < 1.0)) throw DomainError("scale kinds need eta in (0,1)");
            break;
        default:
            break;
    }
}

bool ClosedFormFlow::is_measure() const {
    return kind != FlowKind::EuclidQuadratic && kind != FlowKind::EuclidQuartic &&
           kind != FlowKind::EuclidInverse;
}

FlowKind parse_kind(const std::string& s) {
    static const std::pair<const char*, FlowKind> table[] = {
        {"sinkhorn_location", FlowKind::SinkhornLocation},
        {"sinkhorn_scale", FlowKind::SinkhornScale},
        {"fokker_planck_location", FlowKind::FokkerPlanckLocation},
        {"fokker_planck_scale", FlowKind::FokkerPlanckScale},
        {"mirror_entropy", FlowKind::MirrorEntropy},
        {"mirror_potential_energy", FlowKind::MirrorPotentialEnergy},
        {"euclid_quadratic", FlowKind::EuclidQuadratic},
        {"euclid_quartic", FlowKind::EuclidQuartic},
        {"euclid_inverse", FlowKind::EuclidInverse},
    };
    for (const auto& [name, k] : table)
        if (s == name) return k;
    throw DomainError("unknown flow kind '" + s + "'");
}

std::string kind_name(FlowKind k) {
    switch (k) {
        case FlowKind::SinkhornLocation: return "sinkhorn_location";
        case FlowKind::SinkhornScale: return "sinkhorn_scale";
        case FlowKind::FokkerPlanckLocation: return "fokker_planck_location";
        case FlowKind::FokkerPlanckScale: return "fokker_planck_scale";
        case FlowKind::MirrorEntropy: return "mirror_entropy";
        case FlowKind::MirrorPotentialEnergy: return "mirror_potential_energy";
        case FlowKind::EuclidQuadratic: return "euclid_quadratic";
        case FlowKind::EuclidQuartic: return "euclid_quartic";
        case FlowKind::EuclidInverse: return "euclid_inverse";
    }
    return "unknown";
}

double sigma_s2(double eta, double t) {
    const double s = 1.0 - 2.0 * (1.0 - eta) / (std::exp(2.0 * t / eta) * (eta + 1.0) + (1.0 - eta));
    return s * s;
}

double sigma_f2(double eta, double t) { return 1.0 - (1.0 - eta * eta) * std::exp(-2.0 * t); }

std::variant<GaussianMeasure, double> evaluate(const ClosedFormFlow& fl, double t) {
    if (!(t >= 0.0)) throw DomainError("closed-form flows need t >= 0");
    const double p = fl.param;
    switch (fl.kind) {
        case FlowKind::SinkhornLocation:
        case FlowKind::FokkerPlanckLocation:
            return GaussianMeasure(p * std::exp(-t), 1.0);
        case FlowKind::SinkhornScale: return GaussianMeasure(0.0, sigma_s2(p, t));
        case FlowKind::FokkerPlanckScale: return GaussianMeasure(0.0, sigma_f2(p, t));
        case FlowKind::MirrorEntropy: return GaussianMeasure(0.0, (1.0 + t) * (1.0 + t));
        case FlowKind::MirrorPotentialEnergy:
            return GaussianMeasure(0.0, 1.0 / ((1.0 + t) * (1.0 + t)));
        case FlowKind::EuclidQuadratic: return std::exp(-t);
        case FlowKind::EuclidQuartic:
            if (t > 6.0) throw DomainError("quartic mirror flow ends at t = 6");
            return std::sqrt(1.0 - t / 6.0);
        case FlowKind::EuclidInverse: return std::pow(1.0 + 1.5 * t, -1.0 / 3.0);
    }
    throw DomainError("unknown flow kind");
}

double evaluate_scalar(const ClosedFormFlow& fl, double t) {
    auto r = evaluate(fl, t);
    if (auto* g = std::get_if<GaussianMeasure>(&r)) return g->variance;
    return std::get<double>(r);
}

DeficitRatio deficit_ratio(double eta, double t) {
    if (!(eta > 0.0 && eta < 1.0) || !(t > 0.0)) throw DomainError("deficit ratio needs eta in (0,1), t > 0");
    const double lhs = (1.0 - sigma_f2(eta, t)) / (1.0 - sigma_s2(eta, t));
    const double rhs = (1.0 + eta) * (1.0 + eta) / 4.0 * std::exp(2.0 * t * (1.0 / eta - 1.0));
    return {lhs, rhs};
}

double euclid_mirror_ode_step(FlowKind kind, double x, double dt) {
    double hess = 0.0;
    switch (kind) {
        case FlowKind::EuclidQuadratic: hess = 1.0; break;
        case FlowKind::EuclidQuartic:
            // u = x^4, u'' = 12 x^2
            if (!(x > 0.0)) throw DomainError("quartic mirror flow reached its singularity");
            hess = 12.0 * x * x;
            break;
        case FlowKind::EuclidInverse:
            // u = 1/x on (0, inf), u'' = 2 / x^3
            if (!(x > 0.0)) throw DomainError("inverse mirror needs x > 0");
            hess = 2.0 / (x * x * x);
            break;
        default: throw DomainError("not a Euclidean mirror kind");
    }
    return x - dt * x / hess;
}

double integrate_euclid(FlowKind kind, double x0, double t_end, double dt) {
    const auto n = static_cast<long>(std::llround(t_end / dt));
    double x = x0;
    for (long k = 0; k < n; ++k) x = euclid_mirror_ode_step(kind, x, dt);
    return x;
}

double lsi_constant_quadratic(double f_hess_min) {
    if (!(f_hess_min > 0.0)) throw DomainError("LSI constant needs a positive Hessian bound");
    return f_hess_min;
}

double kl(const GaussianMeasure& p, const GaussianMeasure& q) {
    const double d = p.mean - q.mean;
    return 0.5 * (p.variance / q.variance + d * d / q.variance - 1.0 + std::log(q.variance / p.variance));
}

double w2_squared(const GaussianMeasure& p, const GaussianMeasure& q) {
    const double d = p.mean - q.mean;
    const double s = p.sd() - q.sd();
    return d * d + s * s;
}

}  // namespace sinkflow::gaussian
