// glvlab: command-line laboratory for the planar Ginzburg-Landau vortex.
// Subcommands: profile | energy | coercivity | evolve | modulate.
// Exit codes: 0 success, 2 usage error, 3 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "glv/dynamics.hpp"
#include "glv/energy.hpp"
#include "glv/io.hpp"
#include "glv/sector.hpp"

namespace fs = std::filesystem;
using namespace glv;

namespace {

std::string out_root_default() {
    if (const char* env = std::getenv("GLV_OUT_ROOT")) return env;
    return "glv_out";
}

std::string file_text(const std::string& path) {
    std::ifstream is(path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

struct CommonArgs {
    std::string out = out_root_default();
    std::string profile_path;
    std::string config_hash;   // filled after parse
    std::string profile_hash;  // filled when the profile is loaded/created
};

void stamp(Json& j, const CommonArgs& c) {
    j["config_hash"] = c.config_hash;
    j["profile_hash"] = c.profile_hash;
}

// Serializes the fully resolved configuration next to the outputs and returns
// its hash.  The hash covers the semantic parameters only, so runs that differ
// just in where they write remain byte-identical.
std::string write_resolved_config(const fs::path& dir, const Json& resolved) {
    fs::create_directories(dir);
    write_json_file((dir / "config_resolved.json").string(), resolved);
    Json hashed = resolved;
    hashed.erase("out");
    return fnv1a64_hex(hashed.dump());
}

ProfilePtr obtain_profile(CommonArgs& c, double rmax = 40.0, double tol = 1e-10) {
    VortexProfile p;
    if (!c.profile_path.empty() && fs::exists(c.profile_path)) {
        p = VortexProfile::load_file(c.profile_path);
        c.profile_hash = fnv1a64_hex(file_text(c.profile_path));
    } else {
        p = solve_profile(rmax, tol);
        std::ostringstream os;
        p.save(os);
        c.profile_hash = fnv1a64_hex(os.str());
    }
    return std::make_shared<const VortexProfile>(std::move(p));
}

PerturbationRecipe parse_perturb(const std::string& desc, unsigned seed) {
    PerturbationRecipe r;
    r.seed = seed;
    if (desc.empty() || desc == "none") {
        r.family = "none";
        return r;
    }
    std::stringstream ss(desc);
    std::string tok;
    std::getline(ss, tok, ':');
    r.family = tok;
    if (std::getline(ss, tok, ':')) r.amplitude = std::stod(tok);
    if (std::getline(ss, tok, ':')) r.width = std::stod(tok);
    if (std::getline(ss, tok, ':')) {
        const auto comma = tok.find(',');
        if (comma == std::string::npos) throw CLI::ValidationError("--perturb: center must be x,y");
        r.cx = std::stod(tok.substr(0, comma));
        r.cy = std::stod(tok.substr(comma + 1));
    }
    return r;
}

int cmd_profile(CommonArgs& c, double rmax, double tol) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    auto p = solve_profile(rmax, tol);
    const fs::path table_path = dir / "profile.txt";
    p.save_file(table_path.string());
    c.profile_hash = fnv1a64_hex(file_text(table_path.string()));

    Json hdr{{"a1", p.slope_at_origin},
             {"r_max", p.r_max},
             {"tol", p.tol},
             {"match_radius", p.match_radius},
             {"residual_sup", p.residual_sup},
             {"stitch_error", p.stitch_error},
             {"warnings", p.warnings},
             {"table_file", "profile.txt"}};
    stamp(hdr, c);
    write_json_file((dir / "profile.json").string(), hdr);

    std::cout << "A1 = " << fmt17(p.slope_at_origin) << "\n"
              << "ODE residual sup = " << fmt17(p.residual_sup) << "\n"
              << "tail stitch error = " << fmt17(p.stitch_error) << "\n";
    for (const auto& w : p.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_energy(CommonArgs& c, double L, int n, double R, const std::string& shift,
               double phase, const std::string& perturb, unsigned seed) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    auto profile = obtain_profile(c);
    const Grid2D grid(L, n);
    auto table = VortexTable::make(profile, grid);

    double ax = 0.0, ay = 0.0;
    if (!shift.empty()) {
        const auto comma = shift.find(',');
        if (comma == std::string::npos) throw CLI::ValidationError("--shift must be x,y");
        ax = std::stod(shift.substr(0, comma));
        ay = std::stod(shift.substr(comma + 1));
    }
    const PerturbationRecipe recipe = parse_perturb(perturb, seed);
    std::function<Complex(double, double)> extra;
    const Grid2D* gp = &grid;
    std::vector<Complex> pw;
    if (recipe.family != "none") pw = make_perturbation(grid, recipe);
    if (!pw.empty())
        extra = [gp, &pw](double x, double y) { return bilerp(*gp, pw, x, y); };
    Field2D f = Field2D::orbit(table, ax, ay, phase, pw.empty() ? nullptr : &extra);

    const EnergyResult direct = renormalized_energy_direct(f);
    const DecompResult decomp = renormalized_energy_decomposed(f, R);

    Json sweep = Json::array();
    for (const auto& s : direct.sweep) sweep.push_back({{"r", s.radius}, {"E", s.value}});
    Json pr_table = Json::array();
    for (double rr : {4.0, 8.0, 16.0}) {
        if (rr > L / 4.0) continue;
        const PRResult prr = p_r(f, rr);
        pr_table.push_back({{"R", rr}, {"P_R", prr.value}, {"spread", prr.spread}});
    }
    Json rep{{"direct", {{"value", direct.value}, {"spread", direct.spread},
                          {"flagged", direct.flagged}, {"r_sweep", sweep}}},
             {"decomposed",
              {{"R", R},
               {"Q_R_half", decomp.q_r_half},
               {"N_R", decomp.n_r},
               {"P_R_half", decomp.p_r_half},
               {"I_R", decomp.i_r},
               {"total", decomp.total}}},
             {"route_difference", direct.value - decomp.total},
             {"p_r_decay", pr_table}};
    stamp(rep, c);
    write_json_file((dir / "energy.json").string(), rep);
    std::cout << "E_direct = " << fmt17(direct.value)
              << "  E_decomposed = " << fmt17(decomp.total) << "\n";
    return 0;
}

int cmd_coercivity(CommonArgs& c, int jmax, double R, int refine, bool no_constraint,
                   std::optional<int> only_j, bool dump_matrices) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    auto profile = obtain_profile(c);
    auto grid = refine > 0 ? RadialGrid::graded_refined() : RadialGrid::graded();

    Json rep;
    Json sectors = Json::array();

    if (only_j) {
        const auto bundle = assemble_sector(*only_j, R, grid, profile);
        std::vector<std::vector<double>> cons;
        if (!no_constraint && *only_j == 0) cons.push_back(constraint_chi_rho(*grid, *profile));
        const auto pen = single_pencil(bundle, false, false, cons);
        const auto me = min_eig_constrained(pen, EigMethod::InverseIteration);
        // Correlation of the witness with rho_1 in the Gram inner product.
        double corr = 0.0;
        if (*only_j == 0) {
            std::vector<double> rho(grid->size());
            for (std::size_t i = 0; i < grid->size(); ++i) rho[i] = profile->eval(grid->r[i], 0);
            auto bdot = [&](std::span<const double> a, std::span<const double> b2) {
                double acc = 0.0;
                const auto gv = [&](std::span<const double> e) { return bundle.gram_value(e); };
                std::vector<double> sum(grid->size());
                for (std::size_t i = 0; i < grid->size(); ++i) sum[i] = a[i] + b2[i];
                acc = 0.5 * (gv(sum) - gv(a) - gv(b2));
                return acc;
            };
            corr = bdot(me.witness, rho) /
                   std::sqrt(bundle.gram_value(me.witness) * bundle.gram_value(rho));
        }
        sectors.push_back({{"j", *only_j},
                           {"R", R},
                           {"lambda_min", me.lambda},
                           {"constrained", !cons.empty()},
                           {"witness_rho_correlation", corr},
                           {"method", me.method}});
        if (dump_matrices) {
            std::ofstream os(dir / "sector_matrix.txt");
            os << "# coordinate text format: row col value (Q form, then GRAM marker)\n";
            for (int i = 0; i < pen.n; ++i)
                for (int d = 0; d <= pen.bw; ++d)
                    if (i + d < pen.n && pen.a[d][i] != 0.0)
                        os << i << ' ' << i + d << ' ' << fmt17(pen.a[d][i]) << "\n";
            os << "GRAM\n";
            for (int i = 0; i < pen.n; ++i)
                for (int d = 0; d <= pen.bw; ++d)
                    if (i + d < pen.n && pen.b[d][i] != 0.0)
                        os << i << ' ' << i + d << ' ' << fmt17(pen.b[d][i]) << "\n";
        }
    } else {
        // Combined constrained form, block by block.
        const auto b0 = assemble_sector(0, R, grid, profile);
        {
            const auto me = min_eig_constrained(single_pencil(b0, true, true),
                                                EigMethod::InverseIteration);
            sectors.push_back({{"block", "a0"}, {"lambda_min", me.lambda}, {"method", me.method}});
        }
        {
            const auto me = min_eig_constrained(
                single_pencil(b0, false, false, {constraint_chi_rho(*grid, *profile)}),
                EigMethod::InverseIteration);
            sectors.push_back({{"block", "b0"}, {"lambda_min", me.lambda}, {"method", me.method}});
        }
        const auto cm = constraint_trans_minus(*grid, *profile);
        const auto cp = constraint_trans_plus(*grid, *profile);
        for (int j = 1; j <= jmax; ++j) {
            const auto bj = assemble_sector(j, R, grid, profile);
            const auto bmj = assemble_sector(-j, R, grid, profile);
            for (int sign : {+1, -1}) {
                std::vector<std::vector<double>> cons;
                if (j == 1) cons.push_back(pair_constraint(cm, cp, sign));
                const auto me = min_eig_constrained(pair_pencil(bj, bmj, sign, cons),
                                                    EigMethod::InverseIteration);
                sectors.push_back({{"block", (sign > 0 ? "a" : "b") + std::to_string(j)},
                                   {"lambda_min", me.lambda},
                                   {"method", me.method}});
            }
        }
    }
    rep["sectors"] = sectors;
    rep["grid"] = {{"nodes", grid->size()}, {"r_max", grid->r.back()}, {"refined", refine > 0}};

    // Identity residuals on a deterministic probe function.
    {
        const auto b0 = assemble_sector(0, 2.0, grid, profile);
        std::vector<double> e(grid->size());
        for (std::size_t i = 0; i < grid->size(); ++i) {
            const double r = grid->r[i];
            e[i] = profile->eval(r, 0) * std::exp(-(r - 3.0) * (r - 3.0));
        }
        const auto id = q0_identity_check(e, b0);
        const auto bm2_r = assemble_sector(-2, 2.0, grid, profile);
        const auto b0_chk = assemble_sector(0, 2.0, grid, profile);
        double thebes4 = 0.0;
        {
            const double lhs = bm2_r.q_value(e) - b0_chk.q_value(e);
            const Cutoff cut{2.0};
            const double rhs2 = 4.0 * pairwise_sum(grid->size(), [&](std::size_t i) {
                                    const double r = grid->r[i];
                                    const double omc = 1.0 - cut.chi(r);
                                    const double rho = profile->eval(r, 0);
                                    return rho * rho * omc * omc * e[i] * e[i] / (r * r) *
                                           grid->w[i];
                                });
            thebes4 = lhs - rhs2;
        }
        rep["identity_residuals"] = {{"q0_factorization", id.form_value - id.factorized},
                                     {"thebes4", thebes4}};
    }

    // Similarity constants between the planar H-norm of e(r) e^{i(j+1)theta}
    // and the radial H_j norm, measured on a fixed bump (logged, not assumed).
    {
        const Grid2D g2(30.0, 256);
        auto t2 = VortexTable::make(profile, g2);
        Json ratios = Json::array();
        for (int j = -3; j <= 3; ++j) {
            std::vector<Complex> eps(g2.size());
            std::vector<double> e(grid->size());
            for (std::size_t i = 0; i < grid->size(); ++i) {
                const double r = grid->r[i];
                e[i] = r * std::exp(-0.4 * (r - 2.5) * (r - 2.5));
            }
            for (int iy = 0; iy < g2.n; ++iy)
                for (int ix = 0; ix < g2.n; ++ix) {
                    const double x = g2.coord(ix), y = g2.coord(iy);
                    const double r = std::hypot(x, y);
                    const double val = r * std::exp(-0.4 * (r - 2.5) * (r - 2.5));
                    const double th = std::atan2(y, x);
                    eps[g2.idx(ix, iy)] = std::polar(val, (j + 1) * th);
                }
            const auto bj = assemble_sector(j, 2.0, grid, profile);
            const double planar = h_norm_sq(*t2, eps);
            const double radial = bj.gram_value(e);
            ratios.push_back({{"j", j}, {"planar_over_radial", planar / radial}});
        }
        rep["norm_equivalence"] = ratios;
    }

    // Window scan on a seeded random constrained mode set.
    {
        SectorModes modes;
        modes.grid = grid;
        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss;
        for (int j : {-2, -1, 0, 1, 2}) {
            std::vector<double> a(grid->size()), b(grid->size());
            const double c1 = gauss(rng), c2 = gauss(rng), c3 = gauss(rng), c4 = gauss(rng);
            for (std::size_t i = 0; i < grid->size(); ++i) {
                const double r = grid->r[i];
                a[i] = (c1 + 0.3 * c2 * r) * r * std::exp(-0.3 * (r - 2.0) * (r - 2.0));
                b[i] = (c3 + 0.3 * c4 * r) * r * std::exp(-0.25 * (r - 3.0) * (r - 3.0));
            }
            modes.modes[j] = {a, b};
        }
        impose_orthogonality(modes, *profile);
        const auto scan = coercivity_scan(2.0, 3, modes, *profile);
        rep["window_scan"] = {{"R_selected", scan.r_selected},
                              {"kappa", scan.kappa},
                              {"window_mass", scan.window_mass},
                              {"pigeonhole_bound", scan.pigeonhole_bound}};
    }
    stamp(rep, c);
    write_json_file((dir / "coercivity.json").string(), rep);
    std::cout << "coercivity report written to " << (dir / "coercivity.json").string() << "\n";
    return 0;
}

int cmd_evolve(CommonArgs& c, double L, int n, double T, double dt,
               const std::string& perturb, const std::string& amp_sweep, int cadence,
               unsigned seed, bool rk4, bool dual_track) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    auto profile = obtain_profile(c);
    const Grid2D grid(L, n);
    auto table = VortexTable::make(profile, grid);
    auto bg = make_discrete_vortex(table);

    std::vector<double> amps;
    if (!amp_sweep.empty()) {
        std::stringstream ss(amp_sweep);
        std::string tok;
        while (std::getline(ss, tok, ',')) amps.push_back(std::stod(tok));
    }

    auto run_one = [&](const PerturbationRecipe& recipe, const std::string& tag) {
        EvolveConfig cfg;
        cfg.half_width = L;
        cfg.n = n;
        cfg.dt = dt;
        cfg.t_end = T;
        cfg.recipe = recipe;
        cfg.snapshot_every = cadence;
        cfg.rk4 = rk4;
        cfg.dual_track = dual_track;
        const RunResult rr = orbital_stability_experiment(bg, cfg);

        CsvWriter csv((dir / ("run" + tag + ".csv")).string(),
                      {"t", "energy", "d_E", "a1", "a2", "phi", "rate"},
                      {"config=" + c.config_hash, "profile=" + c.profile_hash});
        for (const auto& row : rr.rows)
            csv.row({row.t, row.energy, row.d_e, row.a1, row.a2, row.phi, row.rate});

        Field2D snap = Field2D::vacuum(table);
        snap.w = rr.final_w;
        save_field(snap, (dir / ("snapshot_final" + tag + ".bin")).string(),
                   (dir / ("snapshot_final" + tag + ".json")).string(), c.profile_hash);

        Json summary{{"d0", rr.d0},
                     {"max_ratio", rr.max_ratio},
                     {"energy0", rr.energy0},
                     {"energy_drift", rr.energy_drift},
                     {"c_witness", rr.c_witness},
                     {"final_quartile_slope", rr.final_quartile_slope},
                     {"truncated", rr.truncated},
                     {"truncation_reason", rr.truncation_reason}};
        if (dual_track) summary["dual_track_max_diff"] = rr.dual_track_max_diff;
        return summary;
    };

    Json rep;
    if (amps.empty()) {
        rep["run"] = run_one(parse_perturb(perturb, seed), "");
    } else {
        Json sweep = Json::array();
        PerturbationRecipe base = parse_perturb(perturb, seed);
        for (std::size_t i = 0; i < amps.size(); ++i) {
            PerturbationRecipe r = base;
            r.amplitude = amps[i];
            Json s = run_one(r, "_amp" + std::to_string(i));
            s["amplitude"] = amps[i];
            sweep.push_back(s);
        }
        rep["amp_sweep"] = sweep;
    }
    stamp(rep, c);
    write_json_file((dir / "summary.json").string(), rep);
    std::cout << "evolution outputs written to " << dir.string() << "\n";
    return 0;
}

int cmd_modulate(CommonArgs& c, const std::string& field_sidecar, double L, int n) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    auto profile = obtain_profile(c);
    const Grid2D grid(L, n);
    auto table = VortexTable::make(profile, grid);
    const Field2D f = load_field(table, field_sidecar);
    const ModulationState st = modulate(view_of(f), {0.0, 0.0}, 0.0);
    Json rep{{"a", {st.a[0], st.a[1]}},
             {"phi", st.phi},
             {"xi_residual", st.xi_residual},
             {"cond_M_eps", st.cond},
             {"newton_iterations", st.newton_iterations}};
    stamp(rep, c);
    write_json_file((dir / "modulate.json").string(), rep);
    std::cout << "a = (" << fmt17(st.a[0]) << ", " << fmt17(st.a[1])
              << ")  phi = " << fmt17(st.phi) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"glvlab: numerical laboratory for the planar Ginzburg-Landau vortex"};
    app.set_config("--config", "", "JSON/TOML config file (flags override)");
    app.require_subcommand(1);

    CommonArgs common;
    app.add_option("--out", common.out, "output directory")
        ->envname("GLV_OUT_ROOT")
        ->capture_default_str();
    app.add_option("--profile", common.profile_path, "profile table to reuse");

    double rmax = 40.0, tol = 1e-10;
    auto* sc_profile = app.add_subcommand("profile", "solve the vortex profile");
    sc_profile->add_option("--rmax", rmax, "table extent")->capture_default_str();
    sc_profile->add_option("--tol", tol, "bisection tolerance on A1")->capture_default_str();

    double L = 30.0, R = 4.0, phase = 0.0;
    int n = 512;
    std::string shift, perturb = "none";
    unsigned seed = 1;
    auto* sc_energy = app.add_subcommand("energy", "renormalized-energy report");
    sc_energy->add_option("--L", L, "half width")->capture_default_str();
    sc_energy->add_option("--N", n, "grid points per axis")->capture_default_str();
    sc_energy->add_option("--R", R, "cutoff scale")->capture_default_str();
    sc_energy->add_option("--shift", shift, "translate the field by x,y");
    sc_energy->add_option("--phase", phase, "global phase rotation");
    sc_energy->add_option("--perturb", perturb, "family:amp[:width[:cx,cy]]");
    sc_energy->add_option("--seed", seed, "random seed");

    int jmax = 6, refine = 0;
    double Rcoer = 4.0;
    bool no_constraint = false, dump_matrices = false;
    int only_j_value = 0;
    auto* sc_coer = app.add_subcommand("coercivity", "sector coercivity report");
    auto* only_j_opt = sc_coer->add_option("--j", only_j_value, "analyse a single sector");
    sc_coer->add_option("--j-range", jmax, "sector range [-j, j]")->capture_default_str();
    sc_coer->add_option("--R", Rcoer, "cutoff scale")->capture_default_str();
    sc_coer->add_option("--refine", refine, "refinement level (0 or 1)")->capture_default_str();
    sc_coer->add_flag("--no-constraint", no_constraint, "drop the orthogonality constraint");
    sc_coer->add_flag("--dump-matrices", dump_matrices, "write matrices in coordinate text form");

    double T = 50.0, dt = 0.0;
    int cadence = 0, n_ev = 256;
    std::string amp_sweep, evolve_perturb = "bump:0.02";
    bool rk4 = false, dual_track = false;
    auto* sc_evolve = app.add_subcommand("evolve", "orbital-stability experiment");
    sc_evolve->add_option("--L", L, "half width")->capture_default_str();
    sc_evolve->add_option("--N", n_ev, "grid points per axis")->capture_default_str();
    sc_evolve->add_option("--T", T, "time horizon")->capture_default_str();
    sc_evolve->add_option("--dt", dt, "time step (0 -> h^2)")->capture_default_str();
    sc_evolve->add_option("--perturb", evolve_perturb, "family:amp[:width[:cx,cy]]")
        ->capture_default_str();
    sc_evolve->add_option("--amp-sweep", amp_sweep, "comma list of amplitudes");
    sc_evolve->add_option("--cadence", cadence, "steps between snapshots (0 -> auto)");
    sc_evolve->add_option("--seed", seed, "random seed")->capture_default_str();
    sc_evolve->add_flag("--rk4", rk4, "explicit RK4 fallback scheme");
    sc_evolve->add_flag("--dual-track", dual_track, "integrate the parameter ODE too");

    std::string field_sidecar;
    auto* sc_mod = app.add_subcommand("modulate", "modulate a stored snapshot");
    sc_mod->add_option("--field", field_sidecar, "snapshot sidecar JSON")->required();
    sc_mod->add_option("--L", L, "half width")->capture_default_str();
    sc_mod->add_option("--N", n, "grid points per axis")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        // Resolved-config echo (flags layered over config file and env).
        Json resolved{{"out", common.out}, {"profile", common.profile_path}};
        std::string sub;
        if (app.got_subcommand(sc_profile)) {
            sub = "profile";
            resolved["profile_cmd"] = {{"rmax", rmax}, {"tol", tol}};
        } else if (app.got_subcommand(sc_energy)) {
            sub = "energy";
            resolved["energy"] = {{"L", L},         {"N", n},       {"R", R},
                                  {"shift", shift}, {"phase", phase}, {"perturb", perturb},
                                  {"seed", seed}};
        } else if (app.got_subcommand(sc_coer)) {
            sub = "coercivity";
            resolved["coercivity"] = {{"j_range", jmax},
                                      {"R", Rcoer},
                                      {"refine", refine},
                                      {"no_constraint", no_constraint},
                                      {"only_j", only_j_opt->count() ? Json(only_j_value) : Json()}};
        } else if (app.got_subcommand(sc_evolve)) {
            sub = "evolve";
            resolved["evolve"] = {{"L", L},           {"N", n_ev},     {"T", T},
                                  {"dt", dt},         {"perturb", evolve_perturb},
                                  {"amp_sweep", amp_sweep}, {"cadence", cadence},
                                  {"seed", seed},     {"rk4", rk4},
                                  {"dual_track", dual_track}};
        } else if (app.got_subcommand(sc_mod)) {
            sub = "modulate";
            resolved["modulate"] = {{"field", field_sidecar}, {"L", L}, {"N", n}};
        }
        common.config_hash = write_resolved_config(common.out, resolved);

        if (sub == "profile") return cmd_profile(common, rmax, tol);
        if (sub == "energy") return cmd_energy(common, L, n, R, shift, phase, perturb, seed);
        if (sub == "coercivity")
            return cmd_coercivity(common, jmax, Rcoer, refine, no_constraint,
                                  only_j_opt->count() ? std::optional<int>(only_j_value)
                                                      : std::nullopt,
                                  dump_matrices);
        if (sub == "evolve")
            return cmd_evolve(common, L, n_ev, T, dt, evolve_perturb, amp_sweep, cadence,
                              seed, rk4, dual_track);
        if (sub == "modulate") return cmd_modulate(common, field_sidecar, L, n);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
