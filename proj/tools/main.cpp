// Batch front end: run geodesic flows, residual checks, and projective
// equivalence on model files. Exit codes: 0 pass, 1 check failed,
// 2 input error, 3 numeric domain exceeded.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "supergeo/model.hpp"

using namespace supergeo;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInputError = 2;
constexpr int kExitNumericDomain = 3;

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty())
        return std::cout;
    file.open(path);
    if (!file)
        throw ParseError("cannot open output file", path);
    return file;
}

std::vector<GrassmannNumber> default_velocity(const Model& model) {
    const CoordinateSystem& cs = model.coords();
    const int L = model.settings().generators;
    std::vector<GrassmannNumber> v;
    for (int i = 0; i < cs.size(); ++i)
        v.push_back(cs.parity(i) == Parity::Even ? GrassmannNumber::scalar(L, 1.0)
                                                 : GrassmannNumber::zero(L));
    return v;
}

std::vector<GrassmannNumber> default_position(const Model& model) {
    const int L = model.settings().generators;
    return std::vector<GrassmannNumber>(model.coords().size(), GrassmannNumber::zero(L));
}

struct CommonArgs {
    std::string model_path;
    std::string model_b_path;
    std::string x_text, v_text;
    std::string inits_path;
    std::string out_path;
    std::string format;
    double t_end = 0;
    double step = 0;
    double tol = 0;
    std::uint64_t seed = 0;
    bool t_end_set = false, step_set = false, tol_set = false, seed_set = false;
};

void apply_overrides(ModelSettings& s, const CommonArgs& args) {
    if (args.t_end_set)
        s.t_end = args.t_end;
    if (args.step_set)
        s.h = args.step;
    if (args.tol_set)
        s.tolerance = args.tol;
    if (args.seed_set)
        s.seed = args.seed;
    if (s.h <= 0)
        throw ParseError("step must be positive", "--step");
}

int run_geodesic(const CommonArgs& args) {
    Model model = load_model_file(args.model_path);
    ModelSettings s = model.settings();
    apply_overrides(s, args);
    if (!args.format.empty() && args.format != "csv")
        throw ParseError("geodesic output format is csv", "--format");
    const int L = s.generators;

    std::vector<GrassmannNumber> x = args.x_text.empty()
                                         ? default_position(model)
                                         : parse_value_list(args.x_text, L, model.coords().size());
    std::vector<GrassmannNumber> v = args.v_text.empty()
                                         ? default_velocity(model)
                                         : parse_value_list(args.v_text, L, model.coords().size());

    GeodesicField field(model.connection());
    SuperPoint start(model.coords_ptr(), x);
    Trajectory traj = field.integrate(start, v, s.t_end, IntegratorOptions{s.h, s.blowup});

    std::vector<ExtraColumn> extras;
    if (model.has_metric()) {
        ExtraColumn energy{"energy", {}};
        energy.values.reserve(traj.states.size());
        for (const auto& state : traj.states) {
            SuperPoint pt = field.unpack_point(state, L);
            energy.values.push_back(model.metric().energy(pt, field.unpack_velocity(state)));
        }
        extras.push_back(std::move(energy));
    }

    std::ofstream file;
    std::ostream& os = open_output(args.out_path, file);
    write_trajectory_csv(os, field, traj, L, extras);
    return kExitPass;
}

CoordinateSystemPtr renamed_system(const CoordinateSystem& cs, const std::string& suffix) {
    std::vector<std::string> evens, odds;
    for (int i = 0; i < cs.size(); ++i)
        (cs.parity(i) == Parity::Even ? evens : odds).push_back(cs.name(i) + suffix);
    return std::make_shared<CoordinateSystem>(std::move(evens), std::move(odds));
}

// fixed well-conditioned parity-preserving affine change used by the
// transform check battery
CoordinateChange builtin_linear_change(const CoordinateSystemPtr& cs) {
    auto target = renamed_system(*cs, "_t");
    std::vector<SuperExpr> formulas;
    std::vector<int> evens, odds;
    for (int i = 0; i < cs->size(); ++i)
        (cs->parity(i) == Parity::Even ? evens : odds).push_back(i);
    auto coord = [&](int i) { return SuperExpr::coordinate(cs->name(i), cs->parity(i)); };
    for (int i = 0; i < cs->size(); ++i) {
        const auto& block = cs->parity(i) == Parity::Even ? evens : odds;
        SuperExpr acc(0.0);
        for (std::size_t pos = 0; pos < block.size(); ++pos) {
            double weight = (block[pos] == i) ? 2.0 : 0.5 / (1.0 + static_cast<double>(pos));
            acc = acc + SuperExpr(weight) * coord(block[pos]);
        }
        if (cs->parity(i) == Parity::Even)
            acc = acc + SuperExpr(0.25); // affine offset on the even part
        formulas.push_back(acc);
    }
    return CoordinateChange(cs, target, std::move(formulas));
}

int run_check(const CommonArgs& args, const std::string& which) {
    Model model = load_model_file(args.model_path);
    ModelSettings s = model.settings();
    apply_overrides(s, args);
    if (!args.format.empty() && args.format != "report")
        throw ParseError("check output format is report", "--format");

    std::ofstream file;
    std::ostream& os = open_output(args.out_path, file);

    double residual = 0.0;
    double tol = s.tolerance;
    std::ostringstream detail;

    if (which == "torsion") {
        auto samples = model_sample_points(model, s.samples, s.seed);
        auto report = is_torsion_free(model.connection(), samples, tol);
        residual = report.max_residual;
        detail << "torsion residual over " << samples.size() << " sample points";
    } else if (which == "compatibility") {
        // the metric comes from --model (or --model-b); the connection from
        // the other model, so a perturbed symbol file can be checked against
        // the metric it claims to be compatible with
        std::optional<Model> other;
        if (!args.model_b_path.empty())
            other = load_model_file(args.model_b_path);
        const SuperMetric* metric = nullptr;
        const ChristoffelField* gamma = nullptr;
        if (model.has_metric()) {
            metric = &model.metric();
            gamma = other ? &other->connection() : &model.connection();
        } else if (other && other->has_metric()) {
            metric = &other->metric();
            gamma = &model.connection();
        } else {
            throw ParseError("compatibility check needs a metric model", args.model_path);
        }
        if (!metric->coords().same_as(gamma->coords()))
            throw ParseError("models use different coordinate systems", args.model_b_path);
        auto samples = model_sample_points(model, s.samples, s.seed);
        residual = compatibility_check(*metric, *gamma, samples);
        detail << "compatibility residual over " << samples.size() << " sample points";
    } else if (which == "intertwine") {
        if (!model.has_metric())
            throw ParseError("intertwine check needs a metric model", args.model_path);
        auto samples = model_sample_cotangent(model, s.samples, s.seed);
        residual = intertwine_check(model.metric(), samples);
        detail << "intertwine residual over " << samples.size() << " cotangent points";
    } else if (which == "transform") {
        auto samples = model_sample_points(model, s.samples, s.seed);
        // identity change
        std::vector<SuperExpr> id;
        for (int i = 0; i < model.coords().size(); ++i)
            id.push_back(SuperExpr::coordinate(model.coords().name(i), model.coords().parity(i)));
        CoordinateChange identity(model.coords_ptr(), renamed_system(model.coords(), ""),
                                  std::move(id));
        ChristoffelField same(identity.target_ptr());
        for (int i = 0; i < model.coords().size(); ++i)
            for (int j = 0; j < model.coords().size(); ++j)
                for (int k = 0; k < model.coords().size(); ++k)
                    same.set_entry(i, j, k, model.connection().entry(i, j, k));
        double r1 = transform_christoffel_residual(model.connection(), identity, same, samples);
        // built-in affine change, transformed symbols built symbolically
        CoordinateChange linear = builtin_linear_change(model.coords_ptr());
        ChristoffelField tilde = transform_christoffel_linear(model.connection(), linear);
        double r2 = transform_christoffel_residual(model.connection(), linear, tilde, samples);
        residual = std::max(r1, r2);
        detail << "transformation-law residual (identity: " << format_double(r1)
               << ", affine: " << format_double(r2) << ")";
    } else {
        throw ParseError("unknown check '" + which + "'", "check");
    }

    bool pass = residual <= tol;
    os << "check: " << which << "\n";
    os << "  model: " << args.model_path << "\n";
    os << "  " << detail.str() << "\n";
    os << "  residual: " << format_double(residual) << "\n";
    os << "  tolerance: " << format_double(tol) << "\n";
    os << "  result: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kExitPass : kExitCheckFailed;
}

std::vector<TangentVector> load_inits(const std::string& path, const Model& model, int L) {
    std::vector<TangentVector> out;
    if (path.empty()) {
        SuperPoint x(model.coords_ptr(), default_position(model));
        out.push_back(TangentVector{x, default_velocity(model)});
        return out;
    }
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open inits file", path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::size_t bar = line.find('|');
        if (bar == std::string::npos)
            throw ParseError("expected 'x-values | v-values'",
                             path + ":" + std::to_string(line_no));
        auto x = parse_value_list(line.substr(0, bar), L, model.coords().size());
        auto v = parse_value_list(line.substr(bar + 1), L, model.coords().size());
        out.push_back(TangentVector{SuperPoint(model.coords_ptr(), x), v});
    }
    if (out.empty())
        throw ParseError("no initial conditions found", path);
    return out;
}

int run_projective(const CommonArgs& args) {
    Model model_a = load_model_file(args.model_path);
    ModelSettings s = model_a.settings();
    // residuals here pass through numeric integration; default looser
    s.tolerance = 1e-6;
    apply_overrides(s, args);
    if (!args.format.empty() && args.format != "report")
        throw ParseError("projective output format is report", "--format");

    std::optional<Model> model_b;
    if (!args.model_b_path.empty())
        model_b = load_model_file(args.model_b_path);
    else if (!model_a.has_oneform())
        throw ParseError("projective needs --model-b or a [oneform] in the model",
                         args.model_path);

    const ChristoffelField& gamma_a = model_a.connection();
    ChristoffelField gamma_b = model_b ? model_b->connection()
                                       : shift_connection(gamma_a, model_a.oneform());
    if (model_b && !model_b->coords().same_as(model_a.coords()))
        throw ParseError("models use different coordinate systems", args.model_b_path);

    const int L = s.generators;
    auto inits = load_inits(args.inits_path, model_a, L);
    auto samples = model_sample_points(model_a, std::max(8, s.samples / 10), s.seed);

    EquivalenceReport report =
        same_geodesics_check(gamma_a, gamma_b, inits, s.t_end,
                             IntegratorOptions{s.h, s.blowup}, s.tolerance, samples);

    std::ofstream file;
    std::ostream& os = open_output(args.out_path, file);
    os << "model A: " << args.model_path << "\n";
    os << "model B: "
       << (args.model_b_path.empty() ? "[oneform] shift of model A" : args.model_b_path) << "\n";
    os << report.render();
    return report.equivalent ? kExitPass : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"supergeo: geodesic flows, metric structures and projective equivalence of "
                 "connections on coordinate superdomains"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string check_name;

    auto add_common = [&](CLI::App* cmd, bool with_b) {
        cmd->add_option("--model", args.model_path, "model file")->required();
        if (with_b)
            cmd->add_option("--model-b", args.model_b_path, "second model file");
        cmd->add_option("--t-end", args.t_end, "integration end time")
            ->each([&args](const std::string&) { args.t_end_set = true; });
        cmd->add_option("--step", args.step, "integrator step")
            ->each([&args](const std::string&) { args.step_set = true; });
        cmd->add_option("--tol", args.tol, "residual tolerance")
            ->each([&args](const std::string&) { args.tol_set = true; });
        cmd->add_option("--seed", args.seed, "sample-point seed")
            ->each([&args](const std::string&) { args.seed_set = true; });
        cmd->add_option("--out", args.out_path, "output file (default stdout)");
        cmd->add_option("--format", args.format, "output format: csv|report");
    };

    CLI::App* geodesic = app.add_subcommand("geodesic", "integrate a geodesic, emit CSV");
    add_common(geodesic, false);
    geodesic->add_option("--x", args.x_text,
                         "start point: per-coordinate 'c@subset' groups joined by ';'");
    geodesic->add_option("--v", args.v_text, "initial velocity, same format as --x");

    CLI::App* check = app.add_subcommand("check", "run a named residual check");
    add_common(check, true);
    check->add_option("name", check_name, "torsion|compatibility|intertwine|transform")
        ->required();

    CLI::App* projective =
        app.add_subcommand("projective", "decide projective equivalence of two models");
    add_common(projective, true);
    projective->add_option("--inits", args.inits_path,
                           "initial conditions file: 'x-values | v-values' per line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitPass : kExitInputError;
    }

    try {
        if (geodesic->parsed())
            return run_geodesic(args);
        if (check->parsed())
            return run_check(args, check_name);
        return run_projective(args);
    } catch (const BlowupError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "last valid time: " << format_double(e.last_valid_time()) << "\n";
        return kExitNumericDomain;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}
