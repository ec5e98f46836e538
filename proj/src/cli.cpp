#include "qw/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "qw/corners.hpp"
#include "qw/errors.hpp"
#include "qw/expectation.hpp"
#include "qw/flowsim.hpp"
#include "qw/io.hpp"
#include "qw/purity.hpp"

namespace qw::cli {

namespace fs = std::filesystem;
using io::json;
using io::to_json;

namespace {

struct Outcome {
    int code = Positive;
    json report = json::object();
};

// Finite numbers as JSON numbers; infinities as the strings "inf" / "-inf".
json real(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return nullptr;
    return v;
}

json certificate_json(const Certificate& c)
{
    return {{"t", c.t}, {"observable", to_json(std::span<const cplx>(c.observable))}, {"min_eigenvalue", c.min_eigenvalue}};
}

json spec_json(const QWeightMap& qw)
{
    json j = to_json(qw);
    j["schema_version"] = io::kSchemaVersion;
    return j;
}

Outcome check(const RunConfig& cfg, const QWeightMap& qw)
{
    Outcome out;
    const QWeightReport v = validate(qw, cfg.grid);
    const GridCertificate cert = certify_gbr(qw, cfg.grid, cfg.tol);
    const SpineResult spine = normal_spine_trivial(qw, cfg.grid);

    json per_t = json::array();
    for (const double t : cfg.grid.values()) {
        const GBRSample s = gbr(qw, t);
        per_t.push_back({{"t", t}, {"norm", s.norm()}, {"cp", s.is_cp(cfg.tol)},
                         {"min_eigenvalue", min_eigenvalue(s.reduced_choi())}});
    }
    out.report["valid"] = v.valid;
    out.report["unital"] = v.unital;
    out.report["normalization"] = real(v.normalization);
    out.report["reasons"] = v.reasons;
    out.report["gbr"] = {{"cp_contraction", cert.holds},
                         {"max_norm", cert.max_norm},
                         {"min_eigenvalue", cert.min_eigenvalue},
                         {"first_failure", cert.first_failure ? json(*cert.first_failure) : json(nullptr)},
                         {"per_t", per_t}};
    out.report["normal_spine"] = {{"trivial", spine.trivial}, {"analytic", spine.analytic}, {"cut", spine.cut},
                                  {"evidence", to_json(spine.evidence)}};
    if (qw.rank_two()) {
        const RankTwoReport r = validate_rank_two(qw, cfg.grid, cfg.tol);
        out.report["rank_two"] = {{"structural", r.structural},
                                  {"kappa1", r.kappa1},
                                  {"kappa2", r.kappa2},
                                  {"kappa1_grid", r.kappa1_grid},
                                  {"kappa2_grid", r.kappa2_grid},
                                  {"kappa1_error", r.kappa1_error},
                                  {"kappa2_error", r.kappa2_error},
                                  {"h_monotone", r.h_monotone},
                                  {"det_at_least_one", r.det_at_least_one},
                                  {"x", r.x},
                                  {"y", r.y},
                                  {"in_parallelogram", r.in_parallelogram},
                                  {"kappa_inequalities", r.kappa_inequalities},
                                  {"sampled_only", r.sampled_only}};
    }
    const bool ok = v.valid && cert.holds;
    out.report["verdict"] = ok ? "valid" : "invalid";
    if (!ok) {
        out.code = Negative;
        out.report["witness"] = {{"t", cert.first_failure ? json(*cert.first_failure) : json(nullptr)},
                                 {"reasons", v.reasons}};
    }
    return out;
}

Outcome classify(const RunConfig& cfg, const QWeightMap& qw)
{
    Outcome out;
    if (qw.rank_one()) {
        const PurityVerdict v = classify_rank_one(qw, cfg.grid);
        out.report["verdict"] = to_string(v.verdict);
        out.report["failed_condition"] = to_string(v.failed_condition);
        out.report["witness"] = v.witness ? to_json(*v.witness) : json(nullptr);
        out.report["witness_subordinate"] = v.witness_subordinate;
        out.report["witness_proportional"] = v.witness_proportional;
        json certs = json::array();
        for (const auto& c : v.certificates)
            certs.push_back(certificate_json(c));
        out.report["certificates"] = certs;
        if (v.witness)
            io::write_json(cfg.out_dir / "witness.json", spec_json(*v.witness));
        out.code = v.verdict == Verdict::QPure ? Positive : v.verdict == Verdict::NotQPure ? Negative : Undecided;
        return out;
    }
    if (qw.rank_two()) {
        const RankTwoWitnesses w = rank_two_witnesses(qw, cfg.grid);
        const auto& r = w.report;
        const bool refuted = r.eta_subordinate && r.nu_subordinate && r.incomparable;
        out.report["verdict"] = refuted ? "NotQPure" : "Undecided";
        out.report["failed_condition"] = refuted ? "IncomparableSubordinates" : "None";
        out.report["witness"] = to_json(w.eta);
        out.report["second_witness"] = to_json(w.nu);
        out.report["kappa1"] = r.kappa1;
        out.report["kappa2"] = r.kappa2;
        out.report["eta_subordinate"] = r.eta_subordinate;
        out.report["nu_subordinate"] = r.nu_subordinate;
        json certs = json::array();
        if (r.eta_not_below_nu)
            certs.push_back(certificate_json(*r.eta_not_below_nu));
        if (r.nu_not_below_eta)
            certs.push_back(certificate_json(*r.nu_not_below_eta));
        out.report["certificates"] = certs;
        io::write_json(cfg.out_dir / "witness.json", spec_json(w.eta));
        io::write_json(cfg.out_dir / "second_witness.json", spec_json(w.nu));
        out.code = refuted ? Negative : Undecided;
        return out;
    }
    out.report["verdict"] = "Undecided";
    out.report["reason"] = "classification covers rank-one and rank-two maps";
    out.code = Undecided;
    return out;
}

Outcome corner(const RunConfig& cfg, const QWeightMap& qw, const json& spec)
{
    Outcome out;
    const Assembled* a = qw.assembled_data();
    if (!a)
        throw Error(ErrorKind::InputError, "corner expects an assembled map");
    const QWeightMap& omega = a->blocks[0];
    const QWeightMap& eta = a->blocks[1];

    std::optional<CornerCandidate> candidate;
    CornerData data;
    if (a->corner) {
        data = *a->corner;
        if (spec["corner"].contains("U"))
            candidate = corner_candidate(omega, eta, io::matrix_from_json(spec["corner"]["U"]),
                                         spec["corner"]["z"].get<double>());
    } else {
        const auto fit = align_weights(omega, eta);
        if (!fit) {
            out.report["verdict"] = "undecided";
            out.report["reason"] = "no alignment of the atom data was found";
            out.code = Undecided;
            return out;
        }
        candidate = corner_candidate(omega, eta, fit->u, fit->z);
        data = candidate->corner;
        out.report["alignment"] = {{"U", to_json(fit->u)}, {"z", fit->z}};
    }
    out.report["corner"] = to_json(data);

    const CornerReport rep = verify_corner(omega, eta, data, cfg.grid);
    out.report["is_q_corner"] = rep.is_q_corner;
    out.report["h_bounded"] = rep.h_bounded;
    out.report["h_monotone"] = rep.h_monotone;
    out.report["limit_cp"] = rep.limit_cp;
    out.report["limit_min_eigenvalue"] = rep.limit_min_eigenvalue;
    out.report["trivially_maximal"] = rep.trivially_maximal;
    out.report["kappa"] = rep.h.kappa;
    out.report["kappa_grid"] = rep.h.kappa_grid;
    out.report["kappa_error"] = rep.h.kappa_error;
    out.report["h"] = to_json(rep.h.values);
    out.report["reasons"] = rep.reasons;
    io::write_curve_csv(cfg.out_dir / "h.csv", rep.h.values, "abs_h");

    if (candidate) {
        json det = json::array();
        bool holds = true;
        for (const auto& p : determinant_inequality_check(omega, *candidate, candidate->lambda, cfg.grid)) {
            det.push_back({{"t", p.t}, {"lhs", p.lhs}, {"rhs", p.rhs}, {"holds", p.holds}});
            holds = holds && p.holds;
        }
        out.report["candidate"] = {{"z", candidate->z}, {"r", candidate->r}, {"lambda", candidate->lambda}};
        out.report["determinant_inequality"] = {{"holds", holds}, {"points", det}};
    }

    if (rep.is_q_corner) {
        const FalsifyResult f = hypermaximal_falsify(assemble_theta(omega, eta, data, cfg.grid), cfg.grid);
        out.report["hypermaximality"] = {{"falsified", f.falsified}, {"description", f.description}, {"tried", f.tried}};
        if (f.witness)
            io::write_json(cfg.out_dir / "witness.json", spec_json(*f.witness));
        out.report["verdict"] = "corner_verified";
    } else {
        out.report["verdict"] = "corner_rejected";
        out.report["witness"] = {{"reasons", rep.reasons}};
        out.code = Negative;
    }
    return out;
}

Outcome expectation(const RunConfig& cfg, const QWeightMap& qw)
{
    Outcome out;
    const ExpectationResult r = boundary_expectation(qw, default_t_sequence(), cfg.seed);
    const std::size_t k = qw.dim();
    out.report["dim_k"] = k;
    out.report["L"] = to_json(r.l.superoperator());
    out.report["vectorization"] = "row-major vec(B)[r*k+s]";
    out.report["converged"] = r.converged;
    out.report["limit_spread"] = r.limit_spread;
    out.report["axioms"] = {{"cp", r.axioms.cp},
                            {"fixes_range", r.axioms.fixes_range},
                            {"range_equality", r.axioms.range_equality},
                            {"idempotent_norm_one", r.axioms.idempotent_norm_one},
                            {"fix_residual", r.axioms.fix_residual},
                            {"range_rank", r.axioms.range_rank},
                            {"l_rank", r.axioms.l_rank}};
    out.report["residual_curve"] = to_json(r.residual_curve);
    io::write_curve_csv(cfg.out_dir / "residual.csv", r.residual_curve, "residual");
    if (!r.converged) {
        out.report["verdict"] = "not_converged";
        out.code = Undecided;
    } else if (!r.axioms.all()) {
        out.report["verdict"] = "axioms_failed";
        out.code = Negative;
    } else {
        out.report["verdict"] = "boundary_expectation";
    }
    return out;
}

Outcome rank_theorem(const RunConfig& cfg, const QWeightMap& qw)
{
    Outcome out;
    const TrichotomyResult t = range_rank_trichotomy(qw, cfg.seed);
    out.report["range_rank"] = t.rank;
    out.report["consistent"] = t.consistent;
    out.report["q_pure_possible"] = t.q_pure_possible;
    bool ok = t.consistent;
    if (t.rank == 2 && qw.rank_two()) {
        const StandardForm s = standard_form_rank_two(qw);
        out.report["standard_form"] = {{"e1", to_json(s.e1)},
                                       {"e2", to_json(s.e2)},
                                       {"mu1", to_json(s.mu1)},
                                       {"mu2", to_json(s.mu2)},
                                       {"unit_defect", s.unit_defect},
                                       {"box_condition", s.box_condition}};
        ok = ok && s.box_condition && s.unit_defect <= 1e-6;
    }
    out.report["verdict"] = ok ? "consistent" : "inconsistent";
    out.code = ok ? Positive : Negative;
    return out;
}

Outcome flowsim(const RunConfig& cfg, const QWeightMap& qw)
{
    Outcome out;
    const std::size_t k = qw.dim();
    const Matrix rho = (1.0 / static_cast<double>(k)) * Matrix::identity(k);
    std::vector<std::pair<std::string, StructuredObservable>> observables = {
        {"E(x,inf)", StructuredObservable::id(k)},
        {"Lambda", StructuredObservable::lambda(Matrix::identity(k))},
    };
    if (k > 1) {
        std::vector<double> d(k);
        for (std::size_t i = 0; i < k; ++i)
            d[i] = static_cast<double>(i + 1) / static_cast<double>(k);
        observables.push_back({"diag(1..k)/k (x) 1", StructuredObservable::op_tensor_id(Matrix::diagonal(d))});
    }

    json rows = json::array();
    std::string csv = "m,observable,direct,recovered,rel_err\n";
    double worst = 0.0;
    double worst_fine = 0.0;
    for (const std::size_t m : {cfg.cells, 2 * cfg.cells}) {
        const DiscretizedH h(k, m, cfg.horizon);
        for (const auto& [name, obs] : observables) {
            const Recovery r = recover_omega(h, qw, rho, cfg.x, obs);
            rows.push_back({{"m", m}, {"observable", name}, {"direct", r.direct}, {"recovered", r.recovered},
                            {"rel_err", r.rel_err}});
            char line[256];
            std::snprintf(line, sizeof line, "%zu,%s,%.17g,%.17g,%.17g\n", m, name.c_str(), r.direct, r.recovered,
                          r.rel_err);
            csv += line;
            double& acc = m == cfg.cells ? worst : worst_fine;
            acc = std::max(acc, r.rel_err);
        }
    }
    {
        std::ofstream f(cfg.out_dir / "convergence.csv");
        f << csv;
    }
    out.report["m"] = cfg.cells;
    out.report["horizon"] = cfg.horizon;
    out.report["x"] = cfg.x;
    out.report["rho"] = "I/k";
    out.report["rows"] = rows;
    out.report["max_rel_err"] = worst;
    out.report["max_rel_err_refined"] = worst_fine;
    out.report["warnings"] = horizon_warnings(qw);
    const bool ok = worst < 0.02;
    out.report["verdict"] = ok ? "recovered" : "recovery_outside_tolerance";
    out.code = ok ? Positive : Negative;
    return out;
}

Outcome curves(const RunConfig& cfg, const QWeightMap& qw)
{
    Outcome out;
    json files = json::array();
    const auto emit = [&](const std::string& name, const std::vector<CurvePoint>& c, const std::string& value) {
        io::write_curve_csv(cfg.out_dir / name, c, value);
        files.push_back(name);
    };
    if (qw.rank_one()) {
        std::vector<CurvePoint> c;
        for (const double t : cfg.grid.values())
            c.push_back({t, rank_one_coefficient(qw, t)});
        emit("c.csv", c, "c");
    } else if (qw.rank_two()) {
        const RankTwoReport r = validate_rank_two(qw, cfg.grid, cfg.tol);
        emit("h1.csv", r.h1_curve, "h1");
        emit("h2.csv", r.h2_curve, "h2");
        emit("det.csv", r.det_curve, "det");
    } else {
        const Assembled& a = *qw.assembled_data();
        if (a.corner)
            emit("h.csv", h_curve(a.blocks[0], a.blocks[1], *a.corner, cfg.grid).values, "abs_h");
        for (std::size_t i = 0; i < 2; ++i)
            if (a.blocks[i].rank_one()) {
                std::vector<CurvePoint> c;
                for (const double t : cfg.grid.values())
                    c.push_back({t, rank_one_coefficient(a.blocks[i], t)});
                emit("c" + std::to_string(i + 1) + ".csv", c, "c");
            }
    }
    out.report["files"] = files;
    out.report["verdict"] = "written";
    return out;
}

}  // namespace

Command parse_command(const std::string& name)
{
    for (const Command c : {Command::Check, Command::Classify, Command::Corner, Command::Expectation,
                            Command::RankTheorem, Command::FlowSim, Command::Curves})
        if (name == command_name(c))
            return c;
    throw Error(ErrorKind::InputError, "unknown command '" + name + "'");
}

const char* command_name(Command c)
{
    switch (c) {
    case Command::Check: return "check";
    case Command::Classify: return "classify";
    case Command::Corner: return "corner";
    case Command::Expectation: return "expectation";
    case Command::RankTheorem: return "ranktheorem";
    case Command::FlowSim: return "flowsim";
    case Command::Curves: return "curves";
    }
    return "?";
}

int run(const RunConfig& cfg)
{
    json spec;
    std::optional<QWeightMap> qw;
    try {
        cfg.grid.values();
        if (!(cfg.tol > 0.0))
            throw Error(ErrorKind::InputError, "tolerance must be positive");
        spec = io::read_json(cfg.input);
        qw = io::qweight_from_json(spec);
        fs::create_directories(cfg.out_dir);
    } catch (const Error& e) {
        std::cerr << "qwcli: " << e.what() << '\n';
        return InputError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "qwcli: " << e.what() << '\n';
        return InputError;
    }

    Outcome out;
    try {
        switch (cfg.command) {
        case Command::Check: out = check(cfg, *qw); break;
        case Command::Classify: out = classify(cfg, *qw); break;
        case Command::Corner: out = corner(cfg, *qw, spec); break;
        case Command::Expectation: out = expectation(cfg, *qw); break;
        case Command::RankTheorem: out = rank_theorem(cfg, *qw); break;
        case Command::FlowSim: out = flowsim(cfg, *qw); break;
        case Command::Curves: out = curves(cfg, *qw); break;
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InputError) {
            std::cerr << "qwcli: " << e.what() << '\n';
            return InputError;
        }
        // The computation cannot decide this input.
        out.code = Undecided;
        out.report = {{"verdict", "unsupported"}, {"error", e.what()}};
    }

    json report = {{"schema_version", io::kSchemaVersion},
                   {"command", command_name(cfg.command)},
                   {"input", cfg.input.filename().string()},
                   {"kind", qw->kind_name()},
                   {"seed", cfg.seed},
                   {"tol", cfg.tol},
                   {"grid", {{"t_min", cfg.grid.t_min}, {"t_max", cfg.grid.t_max}, {"points", cfg.grid.points}}},
                   {"exit_code", out.code}};
    report["result"] = std::move(out.report);
    io::write_json(cfg.out_dir / "report.json", report);
    return out.code;
}

}  // namespace qw::cli
