#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>

#include "sinkflow/diffusion.hpp"
#include "sinkflow/gaussian.hpp"
#include "sinkflow/harness.hpp"
#include "sinkflow/io.hpp"
#include "sinkflow/pma.hpp"
#include "sinkflow/sinkhorn.hpp"

namespace sinkflow::harness {

namespace fs = std::filesystem;

namespace {

constexpr double kKsLevel = 1.63;

GaussianMeasure measure(const json& m) {
    return GaussianMeasure(m.at("mean").get<double>(), m.at("variance").get<double>());
}

struct Setup {
    Grid grid;
    GaussianMeasure mu, nu, rho0;
    std::shared_ptr<const PmaProblem> problem;
    GridDensity rho0_density;
    ConvexPotential u0;
    bool stationary;
};

Setup setup(const ExperimentConfig& c, std::size_t n) {
    const double L = c.num("L");
    const Grid grid(-L, L, n);
    const auto mu = measure(c.problem["mu"]), nu = measure(c.problem["nu"]);
    const auto& r = c.problem["rho0"];
    const auto rho0 = r["family"] == "same_as_nu" ? nu : measure(r);
    auto problem = make_pma_problem(mu.spec(), nu.spec(), grid);
    auto rd = discretize(rho0.spec(), grid);
    auto u0 = brenier_potential(rd, problem->nu);
    const bool stationary = c.problem["mu"] == c.problem["nu"] &&
                            (r["family"] == "same_as_nu" || r == c.problem["nu"]);
    return {grid, mu, nu, rho0, problem, rd, u0, stationary};
}

Setup setup(const ExperimentConfig& c) { return setup(c, c.n()); }

void write_file(const fs::path& dir, const std::string& name, const std::function<void(std::ostream&)>& fn) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (dir / name).string());
    fn(os);
}

void maybe_svg(const ExperimentConfig& c, const fs::path& dir, const std::string& name,
               const std::vector<Series>& table, const AxesSpec& axes) {
    if (!c.output["emit_svg"].get<bool>()) return;
    write_file(dir, name, [&](std::ostream& os) { os << emit_svg(table, axes); });
}

std::size_t stride(const ExperimentConfig& c) { return c.output["snapshot_stride"].get<std::size_t>(); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> checkpoints(const ExperimentConfig& c) {
    return c.numerics.value("checkpoints", std::vector<double>{0.5, 1.0});
}

double horizon(const ExperimentConfig& c) {
    const auto cp = checkpoints(c);
    double T = c.num("T");
    for (double t : cp) T = std::max(T, t);
    return T;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string tag(const std::string& name, double t) { return name + "@t=" + num(t); }

// oracle comparisons shared by the PMA and Fokker-Planck runs
void compare_oracle(const ExperimentConfig& c, Report& r, double t, const GridDensity& rho,
                    const char* mean_tol, const char* var_tol) {
    json row = {{"t", t}, {"mean", rho.mean()}, {"variance", rho.variance()}};
    if (!c.oracle.is_null()) {
        const gaussian::ClosedFormFlow fl(gaussian::parse_kind(c.oracle["kind"]), c.oracle.value("param", 0.0));
        const auto g = std::get<GaussianMeasure>(gaussian::evaluate(fl, t));
        row["oracle_mean"] = g.mean;
        row["oracle_variance"] = g.variance;
        if (g.mean != 0.0) r.check_le(tag("mean_rel_error", t), rel(rho.mean(), g.mean), c.tol(mean_tol));
        r.check_le(tag("variance_rel_error", t), rel(rho.variance(), g.variance), c.tol(var_tol));
    }
    r.rows.push_back(row);
}

struct Level {
    double dual, continuity, tensor, change;
};

Level identity_level(const ExperimentConfig& c, std::size_t n, double dt, double t_end, bool stationary) {
    auto cc = c;
    if (stationary) {
        cc.problem["nu"] = cc.problem["mu"];
        cc.problem["rho0"] = {{"family", "same_as_nu"}};
    }
    const auto s = setup(cc, n);
    auto state = init_pma(s.problem, s.u0);
    auto run = run_pma(state, dt, t_end);
    const auto& prev = run[run.size() - 2];
    const auto& next = run.back();

    const Grid tg(0.5, 2.0, n);
    const auto tensor =
        stationary ? ConvexPotential::quadratic(tg, 1.0)
                   : ConvexPotential::from_functions(
                         tg, [](double x) { return x * x * x * x + 0.5 * x * x; },
                         [](double x) { return 4.0 * x * x * x + x; },
                         [](double x) { return 12.0 * x * x + 1.0; });

    const double k = stationary ? 0.0 : 0.2;
    const auto phi = ConvexPotential::from_functions(
        s.grid, [k](double x) { return 0.5 * x * x + k * std::log(std::cosh(x)); },
        [k](double x) { return x + k * std::tanh(x); },
        [k](double x) { return 1.0 + k / (std::cosh(x) * std::cosh(x)); });
    const Grid target(s.grid.lower() - 1.0, s.grid.upper() + 1.0, n);
    const auto a = discretize(s.mu.spec(), s.grid);
    return {dual_pma_residual(prev, next), continuity_residual(prev, next),
            log_det_hessian_gradient_residual(tensor), change_of_measure_residual(a, phi, target)};
}

// dual-PMA residual is refined in dt on the finer grid; the others jointly in (n, dt)
void identity_checks(const ExperimentConfig& c, const fs::path& dir, Report& r) {
    const auto n = c.numerics.value("identity_n", std::size_t{256});
    const double dt = c.numerics.value("identity_dt", 2e-3);
    const double t_end = c.numerics.value("identity_time", 0.1);
    const double need = c.tol("refinement_ratio");
    const Level a = identity_level(c, n, dt, t_end, false);
    const Level b = identity_level(c, 2 * n, dt / 2.0, t_end, false);
    const Level f = identity_level(c, 2 * n, dt / 4.0, t_end, false);
    const Level rest = identity_level(c, n, dt, t_end, true);
    struct Field {
        const char* name;
        double coarse, fine, stationary;
        const char* refinement;
    };
    const Field fields[] = {
        {"dual_pma", b.dual, f.dual, rest.dual, "dt"},
        {"continuity", a.continuity, b.continuity, rest.continuity, "dt+grid"},
        {"tensor", a.tensor, b.tensor, rest.tensor, "grid"},
        {"change_of_measure", a.change, b.change, rest.change, "grid"},
    };
    write_file(dir, "identities.csv", [&](std::ostream& os) {
        io::write_header(os, {"identity", "refinement", "coarse", "fine", "ratio", "stationary"});
        for (const auto& x : fields)
            os << x.name << "," << x.refinement << "," << io::real(x.coarse) << "," << io::real(x.fine) << ","
               << io::real(x.coarse / x.fine) << "," << io::real(x.stationary) << "\n";
    });
    for (const auto& x : fields) {
        r.rows.push_back({{"identity", x.name},
                          {"refinement", x.refinement},
                          {"coarse", x.coarse},
                          {"fine", x.fine},
                          {"stationary", x.stationary}});
        r.check_ge(std::string("identity_ratio_") + x.name, x.coarse / x.fine, need);
        r.check_le(std::string("identity_stationary_") + x.name, x.stationary, c.tol("stationary"));
    }
}

Report pma_run(const ExperimentConfig& c, const fs::path& dir, Report r) {
    const auto s = setup(c);
    const auto run = run_pma(init_pma(s.problem, s.u0), c.num("dt"), horizon(c));
    for (double t : checkpoints(c)) compare_oracle(c, r, t, state_at(run, t).rho, "mean_rel", "variance_rel");
    write_file(dir, "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, run, stride(c)); });
    write_file(dir, "potential.csv", [&](std::ostream& os) { write_csv(os, run.back().u); });
    write_file(dir, "density.csv", [&](std::ostream& os) { write_csv(os, run.back().rho); });
    Series mean{"mean", {}, {}}, var{"variance", {}, {}};
    for (std::size_t k = 0; k < run.size(); k += stride(c)) {
        mean.x.push_back(run[k].t);
        mean.y.push_back(run[k].rho.mean());
        var.x.push_back(run[k].t);
        var.y.push_back(run[k].rho.variance());
    }
    maybe_svg(c, dir, "moments.svg", {mean, var}, {"PMA moments", "t", "moment"});
    if (c.numerics.value("identities", false)) identity_checks(c, dir, r);
    return r;
}

Report fokker_planck_run(const ExperimentConfig& c, const fs::path& dir, Report r) {
    const auto s = setup(c);
    const double dt = c.num("dt");
    const auto steps = static_cast<std::size_t>(std::llround(horizon(c) / dt));
    auto rho = s.rho0_density;
    const auto& mu = s.problem->mu;
    auto cps = checkpoints(c);
    std::ofstream traj(dir / "trajectory.csv", std::ios::binary);
    io::write_header(traj, {"t", "mean", "variance", "kl"});
    Series var{"variance", {}, {}};
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (k > 0) rho = fokker_planck_step(rho, mu, dt);
        if (k % stride(c) == 0 || k == steps) {
            io::write_row(traj, {t, rho.mean(), rho.variance(), kl_divergence(rho, mu)});
            var.x.push_back(t);
            var.y.push_back(rho.variance());
        }
        for (double cp : cps)
            if (std::abs(cp - t) < 0.5 * dt) compare_oracle(c, r, t, rho, "mean_rel", "variance_rel");
    }
    if (!c.oracle.is_null() && c.oracle["kind"] == "fokker_planck_scale") {
        const double eta = c.oracle["param"].get<double>();
        for (double t : c.numerics.value("deficit_times", std::vector<double>{1.0, 2.0})) {
            const auto d = gaussian::deficit_ratio(eta, t);
            r.rows.push_back({{"t", t}, {"deficit_lhs", d.lhs}, {"deficit_rhs", d.rhs}});
            r.check_ge(tag("deficit_margin", t), d.lhs / d.rhs, 1.0);
        }
    }
    maybe_svg(c, dir, "variance.svg", {var}, {"Fokker-Planck variance", "t", "variance"});
    return r;
}

}  // namespace

Report run_eps_limit(const ExperimentConfig& c, const fs::path& dir) {
    Report r{c.experiment, config_hash(c), json::array(), {}};
    const auto s = setup(c);
    const double T = c.num("T");
    const auto run = run_pma(init_pma(s.problem, s.u0), c.num("dt"), T);
    const std::vector<double> u0(s.u0.u().begin(), s.u0.u().end());
    std::vector<double> eps_col, err_col;
    for (double eps : c.list("eps_list")) {
        const auto k = static_cast<std::size_t>(std::floor(T / eps * (1.0 + 1e-12)));
        auto sk = make_sinkhorn_state(s.problem->mu, s.problem->nu, eps, u0, s.rho0_density);
        for (std::size_t i = 0; i < k; ++i) sk = s_step(sk);
        const auto& ps = state_at(run, static_cast<double>(k) * eps);
        const double w = w2_distance(sk.rho, ps.rho);
        eps_col.push_back(eps);
        err_col.push_back(w * w);
        r.rows.push_back({{"eps", eps}, {"k", k}, {"t", ps.t}, {"w2_squared", w * w}});
    }
    write_file(dir, "eps_limit.csv", [&](std::ostream& os) {
        io::write_header(os, {"eps", "w2_squared"});
        for (std::size_t i = 0; i < eps_col.size(); ++i) io::write_row(os, {eps_col[i], err_col[i]});
    });
    if (s.stationary) {
        r.check_le("stationary_max_error", *std::max_element(err_col.begin(), err_col.end()),
                   c.tol("stationary"));
    } else {
        for (std::size_t i = 1; i < err_col.size(); ++i)
            r.check_in("error_ratio_" + num(eps_col[i - 1]) + "_to_" + num(eps_col[i]),
                       err_col[i] / err_col[i - 1], c.tol("ratio_low"), c.tol("ratio_high"));
    }
    if (err_col.size() > 1 && !s.stationary)
        r.rows.push_back({{"fitted_slope", numerics::loglog_slope(eps_col, err_col)}});
    maybe_svg(c, dir, "eps_limit.svg", {{"W2^2", eps_col, err_col}},
              {"Sinkhorn iterate vs PMA flow", "eps", "W2^2", true, true});
    return r;
}

Report run_laplace_estimate(const ExperimentConfig& c, const fs::path& dir) {
    Report r{c.experiment, config_hash(c), json::array(), {}};
    const double L = c.num("L");
    const Grid grid(-L, L, c.n());
    const auto mu = measure(c.problem["mu"]);
    const double curv = c.problem.value("u_curvature", 1.0);
    const auto u = ConvexPotential::quadratic(grid, curv);
    const auto md = discretize(mu.spec(), grid);
    const auto eps = c.list("eps_list");
    std::vector<double> with, without;
    for (double e : eps) {
        with.push_back(laplace_residual(u, mu.spec(), md, e, true));
        without.push_back(laplace_residual(u, mu.spec(), md, e, false));
        r.rows.push_back({{"eps", e},
                          {"residual", with.back()},
                          {"residual_without_log_term", without.back()},
                          {"near_hessian_floor", u.min_hessian() < 2.0 * u.a_min()}});
    }
    write_file(dir, "laplace.csv", [&](std::ostream& os) {
        io::write_header(os, {"eps", "residual", "residual_without_log_term"});
        for (std::size_t i = 0; i < eps.size(); ++i) io::write_row(os, {eps[i], with[i], without[i]});
    });
    if (eps.size() > 1) {
        r.check_ge("residual_slope", numerics::loglog_slope(eps, with), c.tol("slope_min"));
        r.check_le("control_slope_without_log_term", numerics::loglog_slope(eps, without),
                   c.tol("control_slope_max"));
    }
    maybe_svg(c, dir, "laplace.svg", {{"residual", eps, with}, {"without log term", eps, without}},
              {"Laplace residual", "eps", "sup residual", true, true});
    return r;
}

namespace {

std::vector<double> random_function(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double a = 0.5 + 0.5 * (U(rng) + 1.0), b = U(rng);
    double amp[3], freq[3], phase[3];
    for (int m = 0; m < 3; ++m) {
        amp[m] = 0.3 * U(rng);
        freq[m] = 0.5 + 1.5 * (U(rng) + 1.0);
        phase[m] = 3.14159 * U(rng);
    }
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = g.node(i);
        v[i] = 0.5 * a * x * x + b * x;
        for (int m = 0; m < 3; ++m) v[i] += amp[m] * std::sin(freq[m] * x + phase[m]);
    }
    return v;
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Report sinkhorn_run(const ExperimentConfig& c, const fs::path& dir, Report r) {
    const auto s = setup(c);
    const double eps = c.list("eps_list").front();
    const auto trials = c.numerics.value("trials", 100);
    const auto& mu = s.problem->mu;
    const auto& nu = s.problem->nu;
    std::mt19937_64 rng(c.seed());
    double worst_v = -1.0, worst_u = -1.0, worst_norm = 0.0;
    for (int k = 0; k < trials; ++k) {
        const auto p1 = random_function(s.grid, rng), p2 = random_function(s.grid, rng);
        const double d = sup_diff(p1, p2);
        worst_v = std::max(worst_v, (sup_diff(v_operator(p1, mu, eps), v_operator(p2, mu, eps)) - d) / d);
        worst_u = std::max(worst_u, (sup_diff(u_operator(p1, nu, eps), u_operator(p2, nu, eps)) - d) / d);
    }
    for (int k = 0; k < trials; ++k) {
        const auto u = random_function(s.grid, rng);
        worst_norm = std::max(worst_norm, std::abs(std::expm1(increment_density(u, mu, nu, eps).renormalization())));
    }
    const auto steps = c.numerics.value("steps", std::size_t{10});
    auto sk = make_sinkhorn_state(mu, nu, eps, {s.u0.u().begin(), s.u0.u().end()}, s.rho0_density);
    double worst_marg = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        sk = s_step(sk);
        const auto ym = coupling(sk).y_marginal();
        worst_marg = std::max(worst_marg, sup_diff(ym, nu.values()));
    }
    r.rows.push_back({{"check", "v_contraction"}, {"trials", trials}, {"worst_excess", worst_v}});
    r.rows.push_back({{"check", "u_contraction"}, {"trials", trials}, {"worst_excess", worst_u}});
    r.rows.push_back({{"check", "normalization"}, {"trials", trials}, {"worst_error", worst_norm}});
    r.rows.push_back({{"check", "y_marginal"}, {"steps", steps}, {"worst_error", worst_marg}});
    r.check_le("v_contraction_excess", worst_v, c.tol("contraction_slack"));
    r.check_le("u_contraction_excess", worst_u, c.tol("contraction_slack"));
    r.check_le("normalization_error", worst_norm, c.tol("normalization"));
    r.check_le("y_marginal_error", worst_marg, c.tol("y_marginal"));
    std::ofstream xs(dir / "sinkhorn_x.csv", std::ios::binary), ys(dir / "sinkhorn_y.csv", std::ios::binary);
    write_csv(xs, ys, sk);
    if (c.output.value("write_coupling", false))
        write_file(dir, "coupling.csv", [&](std::ostream& os) { write_csv(os, coupling(sk)); });
    return r;
}

Report metric_derivative(const ExperimentConfig& c, const fs::path& dir, Report r) {
    const auto s = setup(c);
    const double t = c.numerics.value("t", 0.5);
    const auto deltas = c.numerics.value("deltas", std::vector<double>{0.1, 0.05, 0.025});
    const double dmax = *std::max_element(deltas.begin(), deltas.end());
    const double dmin = *std::min_element(deltas.begin(), deltas.end());
    const auto run = run_pma(init_pma(s.problem, s.u0), c.num("dt"), std::max(horizon(c), t + dmax));
    const auto rows = metric_derivative_lot(run, t, deltas);
    write_file(dir, "metric_derivative.csv", [&](std::ostream& os) {
        io::write_header(os, {"delta", "lot_rate", "speed", "ratio"});
        for (const auto& row : rows) io::write_row(os, {row.delta, row.lot_rate, row.speed, row.ratio});
    });
    Series ratio{"ratio", {}, {}};
    for (const auto& row : rows) {
        r.rows.push_back({{"delta", row.delta}, {"lot_rate", row.lot_rate}, {"speed", row.speed}, {"ratio", row.ratio}});
        ratio.x.push_back(row.delta);
        ratio.y.push_back(row.ratio);
        if (row.delta == dmin) r.check_in(tag("lot_speed_ratio", t), row.ratio, c.tol("ratio_low"), c.tol("ratio_high"));
    }
    const auto lin = linearized_pushforward_check(run, t, dmin);
    r.rows.push_back({{"delta", dmin}, {"second_order", lin.second_order}, {"first_order", lin.first_order}});
    r.check_ge("linearization_reduction", lin.first_order / lin.second_order, c.tol("reduction"));
    maybe_svg(c, dir, "metric_derivative.svg", {ratio}, {"LOT rate over speed", "delta", "ratio"});
    return r;
}

Report kl_decay(const ExperimentConfig& c, const fs::path& dir, Report r) {
    const auto s = setup(c);
    const auto run = run_pma(init_pma(s.problem, s.u0), c.num("dt"), horizon(c));
    const double c_lsi = gaussian::lsi_constant_quadratic(1.0 / s.mu.variance);
    const auto rows = kl_decay_series(run, c_lsi);
    const bool equality = c.numerics.value("expect_equality", false);
    double worst_ratio = 0.0, worst_eq = 0.0;
    Series kl{"KL", {}, {}}, bound{"bound", {}, {}};
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& row = rows[k];
        if (row.bound > 1e-12) {
            worst_ratio = std::max(worst_ratio, row.kl / row.bound);
            if (k > 0) worst_eq = std::max(worst_eq, std::abs(row.kl / row.bound - 1.0));
        }
        if (k % stride(c) == 0 || k + 1 == rows.size()) {
            r.rows.push_back({{"t", row.t}, {"kl", row.kl}, {"bound", row.bound}, {"h", row.h}});
            kl.x.push_back(row.t);
            kl.y.push_back(row.kl);
            bound.x.push_back(row.t);
            bound.y.push_back(row.bound);
        }
    }
    write_file(dir, "kl_decay.csv", [&](std::ostream& os) {
        io::write_header(os, {"t", "kl", "bound", "h"});
        for (std::size_t k = 0; k < rows.size(); k += stride(c))
            io::write_row(os, {rows[k].t, rows[k].kl, rows[k].bound, rows[k].h});
    });
    r.check_le("kl_over_bound", worst_ratio, c.tol("bound_factor"));
    if (equality) r.check_le("kl_bound_equality_rel", worst_eq, c.tol("equality_rel"));
    maybe_svg(c, dir, "kl_decay.svg", {kl, bound}, {"KL decay", "t", "KL", false, true});
    return r;
}

void summary_row(std::ostream& os, double t, std::span<const double> x, const GridDensity& d) {
    write_summary_row(os, t, x, ks_distance(x, d));
}

Report diffusion_run(const ExperimentConfig& c, const fs::path& dir, Report r) {
    const auto s = setup(c);
    const double dt = c.num("dt"), T = c.num("T");
    const auto P = c.numerics["particles"].get<std::size_t>();
    const auto run = run_pma(init_pma(s.problem, s.u0), dt, T);
    const StepOptions opt{Backend::OpenMP, true};
    const double nse = c.tol("standard_errors");

    auto e = make_ensemble(sample(s.rho0_density, P, c.seed()), c.seed());
    std::ofstream summ(dir / "sde_summary.csv", std::ios::binary);
    write_summary_header(summ);
    summary_row(summ, 0.0, e.positions, run[0].rho);
    auto cps = checkpoints(c);
    for (std::size_t k = 0; k + 1 < run.size(); ++k) {
        e = sinkhorn_sde_step(e, run[k], dt, opt);
        const auto& ps = run[k + 1];
        if ((k + 1) % stride(c) == 0) summary_row(summ, ps.t, e.positions, ps.rho);
        for (double cp : cps) {
            if (std::abs(cp - ps.t) >= 0.5 * dt) continue;
            const double m = numerics::mean(e.positions), v = numerics::variance(e.positions);
            const double se_m = std::sqrt(ps.rho.variance() / static_cast<double>(P));
            const double se_v = ps.rho.variance() * std::sqrt(2.0 / static_cast<double>(P - 1));
            r.rows.push_back({{"t", ps.t}, {"mean", m}, {"variance", v},
                              {"flow_mean", ps.rho.mean()}, {"flow_variance", ps.rho.variance()}});
            r.check_le(tag("sde_mean_standard_errors", ps.t), std::abs(m - ps.rho.mean()) / se_m, nse);
            r.check_le(tag("sde_variance_standard_errors", ps.t), std::abs(v - ps.rho.variance()) / se_v, nse);
        }
    }
    write_file(dir, "sde_snapshot.csv", [&](std::ostream& os) { write_csv(os, e); });

    // dual diffusion with the mirror frozen at `frozen_time`
    auto frozen = state_at(run, c.numerics.value("frozen_time", 0.5));
    auto y = make_ensemble(sample(s.problem->nu, P, c.seed() + 1), c.seed() + 1);
    const auto steps = static_cast<std::size_t>(std::llround(T / dt));
    std::ofstream dsum(dir / "dual_summary.csv", std::ios::binary);
    write_summary_header(dsum);
    summary_row(dsum, 0.0, y.positions, s.problem->nu);
    for (std::size_t k = 0; k < steps; ++k) {
        frozen.t = y.t;
        y = dual_sde_step(y, frozen, dt, opt);
        if ((k + 1) % stride(c) == 0) summary_row(dsum, y.t, y.positions, s.problem->nu);
    }
    const double ks = ks_distance(y.positions, s.problem->nu);
    const double ks_bound = c.tol("ks_factor") * kKsLevel / std::sqrt(static_cast<double>(P));
    r.rows.push_back({{"t", y.t}, {"dual_ks", ks}, {"ks_bound", ks_bound}});
    r.check_le("dual_stationarity_ks", ks, ks_bound);
    write_file(dir, "dual_snapshot.csv", [&](std::ostream& os) { write_csv(os, y); });
    return r;
}

Report markov_chain_run(const ExperimentConfig& c, const fs::path& dir, Report r) {
    const auto s = setup(c);
    const auto P = c.numerics["particles"].get<std::size_t>();
    const auto steps = c.numerics.value("chain_steps", std::size_t{10});
    const double bound = c.tol("ks_factor") * kKsLevel / std::sqrt(static_cast<double>(P));
    std::ofstream out(dir / "chain_summary.csv", std::ios::binary);
    io::write_header(out, {"eps", "k", "mean", "variance", "ks_distance"});
    for (double eps : c.list("eps_list")) {
        auto sk = make_sinkhorn_state(s.problem->mu, s.problem->nu, eps, {s.u0.u().begin(), s.u0.u().end()},
                                      s.rho0_density);
        auto e = markov_chain_init(s.rho0_density, s.problem->nu, P, c.seed());
        double worst = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            e = markov_chain_step(e, sk);
            sk = s_step(sk);
            const double ks = ks_distance_nodes(e.positions, sk.rho);
            worst = std::max(worst, ks);
            io::write_row(out, {eps, static_cast<double>(k + 1), numerics::mean(e.positions),
                                numerics::variance(e.positions), ks});
            r.rows.push_back({{"eps", eps}, {"k", k + 1}, {"ks", ks}});
        }
        r.check_le("chain_ks_max@eps=" + num(eps), worst, bound);
    }
    return r;
}

Report gaussian_closed_form(const ExperimentConfig& c, const fs::path& dir, Report r) {
    using gaussian::FlowKind;
    const double dt_ode = c.numerics.value("ode_dt", 1e-4);
    const std::tuple<FlowKind, double> odes[] = {
        {FlowKind::EuclidQuadratic, 1.0}, {FlowKind::EuclidQuartic, 3.0}, {FlowKind::EuclidInverse, 2.0}};
    for (const auto& [kind, t] : odes) {
        const double x = gaussian::integrate_euclid(kind, 1.0, t, dt_ode);
        const double exact = gaussian::evaluate_scalar(gaussian::ClosedFormFlow(kind), t);
        r.rows.push_back({{"kind", gaussian::kind_name(kind)}, {"t", t}, {"numeric", x}, {"exact", exact}});
        r.check_le("euclid_abs_error_" + gaussian::kind_name(kind), std::abs(x - exact), c.tol("euclid_abs"));
    }

    const auto g = GaussianMeasure(0.0, 1.0).spec();
    const double dt = c.num("dt");
    struct Flow {
        FlowKind kind;
        double L;
        MirrorFunctional F;
    };
    const Flow flows[] = {
        {FlowKind::MirrorEntropy, c.numerics.value("entropy_L", 12.0), entropy_functional()},
        {FlowKind::MirrorPotentialEnergy, c.num("L"),
         potential_energy_functional([](double x) { return 0.5 * x * x; })},
    };
    for (const auto& fl : flows) {
        const Grid grid(-fl.L, fl.L, c.n());
        auto problem = make_mirror_flow_problem(g, grid, fl.F, g);
        const auto run = run_pma(init_pma(problem, ConvexPotential::quadratic(grid, 1.0)), dt, horizon(c));
        const auto name = gaussian::kind_name(fl.kind);
        write_file(dir, name + ".csv", [&](std::ostream& os) { write_trajectory_csv(os, run, stride(c)); });
        for (double t : checkpoints(c)) {
            const double v = state_at(run, t).rho.variance();
            const double exact = gaussian::evaluate_scalar(gaussian::ClosedFormFlow(fl.kind), t);
            r.rows.push_back({{"kind", name}, {"t", t}, {"variance", v}, {"exact", exact}});
            r.check_le(tag("mirror_variance_rel_error_" + name, t), rel(v, exact), c.tol("mirror_rel"));
        }
    }
    write_file(dir, "closed_form.csv", [&](std::ostream& os) {
        io::write_header(os, {"t", "euclid_quadratic", "euclid_quartic", "euclid_inverse", "mirror_entropy",
                              "mirror_potential_energy"});
        for (int k = 0; k <= 60; ++k) {
            const double t = 0.1 * k;
            std::vector<double> row{t};
            for (auto kind : {FlowKind::EuclidQuadratic, FlowKind::EuclidQuartic, FlowKind::EuclidInverse,
                              FlowKind::MirrorEntropy, FlowKind::MirrorPotentialEnergy})
                row.push_back(gaussian::evaluate_scalar(gaussian::ClosedFormFlow(kind), t));
            io::write_row(os, row);
        }
    });
    return r;
}

}  // namespace

Report run_experiment(const ExperimentConfig& c, const fs::path& dir) {
    fs::create_directories(dir);
    Report r{c.experiment, config_hash(c), json::array(), {}};
    const auto& e = c.experiment;
    if (e == "eps_limit") return run_eps_limit(c, dir);
    if (e == "laplace_estimate") return run_laplace_estimate(c, dir);
    if (e == "pma_run") return pma_run(c, dir, std::move(r));
    if (e == "fokker_planck_run") return fokker_planck_run(c, dir, std::move(r));
    if (e == "sinkhorn_run") return sinkhorn_run(c, dir, std::move(r));
    if (e == "metric_derivative") return metric_derivative(c, dir, std::move(r));
    if (e == "kl_decay") return kl_decay(c, dir, std::move(r));
    if (e == "diffusion_run") return diffusion_run(c, dir, std::move(r));
    if (e == "markov_chain_run") return markov_chain_run(c, dir, std::move(r));
    if (e == "gaussian_closed_form") return gaussian_closed_form(c, dir, std::move(r));
    throw ConfigError("unknown experiment '" + e + "'");
}

void tabulate(const std::string& kind, double param, double t_max, std::size_t steps, std::ostream& os) {
    if (steps == 0 || !(t_max >= 0.0)) throw DomainError("tabulate needs steps > 0 and t_max >= 0");
    const gaussian::ClosedFormFlow fl(gaussian::parse_kind(kind), param);
    io::write_header(os, {"t", "value"});
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = t_max * static_cast<double>(k) / static_cast<double>(steps);
        io::write_row(os, {t, gaussian::evaluate_scalar(fl, t)});
    }
}

}  // namespace sinkflow::harness
