#pragma once

// Command-line front end. cli_dispatch() parses argv, runs one subcommand and
// writes JSON or CSV to `out` (or to --out). Exit codes: 0 success, 1 usage
// error, 2 data error.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compnull/bayes_lp.hpp"
#include "compnull/closed_form.hpp"
#include "compnull/error.hpp"
#include "compnull/latin3.hpp"
#include "compnull/mediation.hpp"
#include "compnull/pvalue.hpp"
#include "compnull/region_io.hpp"
#include "compnull/sim.hpp"

namespace compnull {

namespace cli_detail {

using nlohmann::json;

struct Emitter {
    std::ostream& fallback;
    std::string path;

    void write(const std::string& text) const {
        if (path.empty()) {
            fallback << text;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw DataError("cannot write " + path);
        f << text;
    }
    void write(const json& j) const { write(j.dump(2) + "\n"); }
};

inline std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> v;
    std::string tok;
    std::istringstream ss(text);
    while (std::getline(ss, tok, ',')) {
        const auto d = detail::parse_double(detail::split_csv_line(tok).front());
        if (!d) throw InvalidArgument(std::string(what) + ": not a number: \"" + tok + "\"");
        v.push_back(*d);
    }
    if (v.empty()) throw InvalidArgument(std::string(what) + ": empty list");
    return v;
}

/// "lo:hi:step" expanded inclusively, or a plain comma list.
inline std::vector<double> parse_range(const std::string& text, const char* what) {
    if (text.find(':') == std::string::npos) return parse_list(text, what);
    std::string t = text;
    std::replace(t.begin(), t.end(), ':', ',');
    const auto parts = parse_list(t, what);
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
        throw InvalidArgument(std::string(what) + ": expected lo:hi:step with step > 0");
    std::vector<double> v;
    const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long i = 0; i <= count; ++i) v.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return v;
}

inline RejectionRegion2D region_for(const std::string& method, double alpha, const std::string& region_file) {
    if (!region_file.empty()) return load_region(region_file);
    if (method == "minimax") return build_minimax_region(alpha);
    if (method == "extended") return build_extended_region(alpha);
    if (method == "js") return build_js_region(alpha);
    throw InvalidArgument("method \"" + method + "\" needs --region");
}

inline json decision_json(const std::string& method, double alpha, const TestStatisticPair& z, double prob, bool reject) {
    return json{{"method", method}, {"alpha", alpha}, {"zx", z.zx}, {"zy", z.zy}, {"rejection_probability", prob},
                {"reject", reject}};
}

} // namespace cli_detail

inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using cli_detail::json;
    CLI::App app{"Tests of the composite null delta_x * delta_y = 0"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string out_path;
    app.add_option("--out", out_path, "Write output to this file instead of stdout");
    std::function<void()> action;

    // region build
    auto* region = app.add_subcommand("region", "Rejection regions")->require_subcommand(1);
    auto* region_build = region->add_subcommand("build", "Build a closed-form region and print it as JSON");
    double rb_alpha = 0.05;
    std::string rb_method = "minimax";
    region_build->add_option("--alpha", rb_alpha)->required();
    region_build->add_option("--method", rb_method)->check(CLI::IsMember({"minimax", "extended", "js"}));
    region_build->callback([&] {
        action = [&] {
            cli_detail::Emitter{out, out_path}.write(serialize(cli_detail::region_for(rb_method, rb_alpha, ""), 2) + "\n");
        };
    });

    // test
    auto* test = app.add_subcommand("test", "Decide for one statistic pair");
    double t_zx = 0.0, t_zy = 0.0, t_alpha = 0.05, t_u = -1.0;
    std::string t_method = "minimax", t_region;
    std::uint64_t t_seed = 0;
    test->add_option("--zx", t_zx)->required();
    test->add_option("--zy", t_zy)->required();
    test->add_option("--alpha", t_alpha);
    test->add_option("--method", t_method)->check(CLI::IsMember({"minimax", "extended", "js", "bayes"}));
    test->add_option("--region", t_region, "Region JSON file (required for bayes)");
    test->add_option("--u", t_u, "Uniform draw used by randomized cells");
    test->add_option("--seed", t_seed, "Seed for the uniform draw when --u is absent");
    test->callback([&] {
        action = [&] {
            const auto r = cli_detail::region_for(t_method, t_alpha, t_region);
            const TestStatisticPair z{t_zx, t_zy, std::nullopt};
            const double prob = r.rejection_prob_at_point(z);
            double u = t_u;
            if (u < 0.0) {
                std::mt19937_64 rng(t_seed);
                u = std::uniform_real_distribution<double>()(rng);
            }
            auto j = cli_detail::decision_json(t_region.empty() ? t_method : std::string(to_string(r.kind())), r.alpha(), z,
                                               prob, u < prob);
            if (t_method == "js" && t_region.empty()) j["p_value"] = js_test(z, t_alpha).p_value;
            cli_detail::Emitter{out, out_path}.write(j);
        };
    });

    // test3
    auto* test3 = app.add_subcommand("test3", "Latin-square test of d1 * d2 * d3 = 0");
    double t3_z[3] = {0.0, 0.0, 0.0};
    int t3_k = 2;
    test3->add_option("--z1", t3_z[0])->required();
    test3->add_option("--z2", t3_z[1])->required();
    test3->add_option("--z3", t3_z[2])->required();
    test3->add_option("--K", t3_k, "Order of the cyclic square; alpha = 1/K")->check(CLI::Range(1, 1000));
    test3->callback([&] {
        action = [&] {
            const auto sq = normalize_corner(cyclic_latin(t3_k)).square;
            const auto r = build_latin_region(sq, 1.0 / t3_k);
            cli_detail::Emitter{out, out_path}.write(json{{"K", t3_k},
                                                           {"alpha", 1.0 / t3_k},
                                                           {"z", {t3_z[0], t3_z[1], t3_z[2]}},
                                                           {"reject", r.rejects(t3_z[0], t3_z[1], t3_z[2])}});
        };
    });

    // pvalue
    auto* pv = app.add_subcommand("pvalue", "p-value for one statistic pair");
    double pv_zx = 0.0, pv_zy = 0.0;
    std::string pv_method = "extended_minimax";
    int pv_res = kDefaultPvalueResolution;
    double pv_dx = 0.0, pv_dy = 0.0, pv_sx = 1.0, pv_sy = 1.0, pv_n = 1.0;
    pv->add_option("--zx", pv_zx);
    pv->add_option("--zy", pv_zy);
    pv->add_option("--method", pv_method)->check(CLI::IsMember({"extended_minimax", "js", "sobel"}));
    pv->add_option("--resolution", pv_res);
    pv->add_option("--delta-x-hat", pv_dx);
    pv->add_option("--delta-y-hat", pv_dy);
    pv->add_option("--s-x", pv_sx);
    pv->add_option("--s-y", pv_sy);
    pv->add_option("--n", pv_n);
    pv->callback([&] {
        action = [&] {
            const TestStatisticPair z{pv_zx, pv_zy, std::nullopt};
            json j{{"method", pv_method}};
            if (pv_method == "extended_minimax") {
                j["p_value"] = minimax_pvalue(z, pv_res).p;
                j["resolution"] = pv_res;
            } else if (pv_method == "js") {
                j["p_value"] = js_pvalue(z).p;
            } else {
                const auto s = sobel_test({pv_dx, pv_dy, pv_sx, pv_sy, pv_n});
                j["z"] = s.z;
                j["p_value"] = s.p_value;
                j["degenerate"] = s.degenerate;
            }
            cli_detail::Emitter{out, out_path}.write(j);
        };
    });

    // adjust
    auto* adjust = app.add_subcommand("adjust", "Multiplicity adjustment of a list of p-values");
    std::string adj_method;
    double adj_level = 0.05;
    std::string adj_in;
    std::vector<double> adj_p;
    adjust->add_option("method", adj_method)->required()->check(CLI::IsMember({"bh", "bonferroni"}));
    adjust->add_option("--level", adj_level, "FDR level q or family-wise alpha");
    adjust->add_option("--in", adj_in, "File with one p-value per line");
    adjust->add_option("p", adj_p, "p-values");
    adjust->callback([&] {
        action = [&] {
            std::vector<double> p = adj_p;
            if (!adj_in.empty()) {
                std::ifstream f(adj_in);
                if (!f) throw DataError("cannot open " + adj_in);
                std::string line;
                std::size_t lineno = 0;
                while (std::getline(f, line)) {
                    ++lineno;
                    const auto cells = detail::split_csv_line(line);
                    if (cells.front().empty()) continue;
                    const auto v = detail::parse_double(cells.front());
                    if (!v) {
                        if (lineno == 1) continue;
                        throw DataError(adj_in + ": line " + std::to_string(lineno) + ": not a number");
                    }
                    p.push_back(*v);
                }
            }
            const auto d = adj_method == "bh" ? benjamini_hochberg(p, adj_level) : bonferroni(p, adj_level);
            json j{{"method", adj_method}, {"level", adj_level}, {"p_values", p}, {"reject", std::vector<bool>(d)}};
            cli_detail::Emitter{out, out_path}.write(j);
        };
    });

    // bayes solve
    auto* bayes = app.add_subcommand("bayes", "Bayes-risk optimal region")->require_subcommand(1);
    auto* bayes_solve = bayes->add_subcommand("solve", "Solve the linear program and print the region");
    double bs_alpha = 0.05, bs_sd = 2.0;
    int bs_m = 65, bs_gp = 64;
    bool bs_derand = false;
    bayes_solve->add_option("--alpha", bs_alpha);
    bayes_solve->add_option("--m", bs_m, "Cells per half side of the box");
    bayes_solve->add_option("--prior-sd", bs_sd);
    bayes_solve->add_option("--grid-points", bs_gp, "Quadrature nodes for the prior integrals");
    bayes_solve->add_flag("--derandomize", bs_derand, "Drop cells with fractional rejection probability");
    bayes_solve->callback([&] {
        action = [&] {
            const auto p = build_lp(bs_alpha, bs_m, bs_sd, bs_gp);
            const auto s = solve_lp(p);
            if (s.solver_status != LpStatus::optimal)
                throw DataError("linear program not solved: " + std::string(to_string(s.solver_status)));
            err << "status=" << to_string(s.solver_status) << " objective=" << s.objective_value
                << " iterations=" << s.iterations << "\n";
            cli_detail::Emitter{out, out_path}.write(serialize(assemble_bayes_region(p, s, bs_derand), 2) + "\n");
        };
    });

    // fit
    auto* fit = app.add_subcommand("fit", "Product-method statistics from a mediation CSV");
    std::string f_csv, f_y = "y", f_a = "a", f_m = "m", f_cov, f_model = "main";
    double f_ap = 1.0, f_app = 0.0, f_alpha = 0.05;
    fit->add_option("--csv", f_csv)->required();
    fit->add_option("--y", f_y);
    fit->add_option("--a", f_a);
    fit->add_option("--m", f_m);
    fit->add_option("--covariates", f_cov, "Comma-separated covariate columns");
    fit->add_option("--model", f_model)->check(CLI::IsMember({"main", "interaction"}));
    fit->add_option("--a-prime", f_ap);
    fit->add_option("--a-dblprime", f_app);
    fit->add_option("--alpha", f_alpha);
    fit->callback([&] {
        action = [&] {
            CsvSchema schema{f_y, f_a, f_m, {}};
            std::istringstream cs(f_cov);
            for (std::string c; std::getline(cs, c, ',');)
                if (!c.empty()) schema.covariates.push_back(c);
            MediationModel model;
            model.type = f_model == "main" ? MediationModel::Type::main_effects : MediationModel::Type::interaction;
            model.a_prime = f_ap;
            model.a_dblprime = f_app;
            const auto r = product_method_stats(load_csv(f_csv, schema), model);
            const auto ext = build_extended_region(f_alpha);
            const auto js = js_test(r.z, f_alpha);
            const auto sob = sobel_test(*r.z.provenance);
            json j{{"n", r.fit.n},
                   {"model", f_model},
                   {"delta_x_hat", r.fit.delta_x_hat},
                   {"delta_y_hat", r.fit.delta_y_hat},
                   {"se_x", r.fit.se_x},
                   {"se_y", r.fit.se_y},
                   {"zx", r.z.zx},
                   {"zy", r.z.zy},
                   {"alpha", f_alpha},
                   {"extended_minimax", {{"reject", ext.rejection_prob_at_point(r.z) > 0.0}}},
                   {"js", {{"reject", js.reject}, {"p_value", js.p_value}}},
                   {"sobel", {{"z", sob.z}, {"p_value", sob.p_value}, {"reject", sobel_rejects(sob, f_alpha)}}}};
            cli_detail::Emitter{out, out_path}.write(j);
        };
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo studies (CSV output)")->require_subcommand(1);
    auto* sim_power = sim->add_subcommand("power", "Rejection rates over a grid of alternatives");
    double sp_alpha = 0.05;
    std::int64_t sp_reps = 100000;
    std::uint64_t sp_seed = 1;
    int sp_n = 50;
    std::string sp_methods = "minimax,js", sp_diag = "0:0.4:0.05", sp_grid, sp_region;
    bool sp_derand = false;
    sim_power->add_option("--alpha", sp_alpha);
    sim_power->add_option("--reps", sp_reps);
    sim_power->add_option("--seed", sp_seed);
    sim_power->add_option("--n", sp_n);
    sim_power->add_option("--methods", sp_methods, "Comma list of minimax, extended, bayes, js, sobel");
    sim_power->add_option("--diagonal", sp_diag, "delta_x = delta_y values, lo:hi:step or a comma list");
    sim_power->add_option("--grid", sp_grid, "Explicit points dx:dy separated by commas (overrides --diagonal)");
    sim_power->add_option("--bayes-region", sp_region, "Region JSON used by the bayes method");
    sim_power->add_flag("--derandomize", sp_derand, "Use only the cells with rejection probability one");
    sim_power->callback([&] {
        action = [&] {
            SimSpec spec;
            spec.alpha = sp_alpha;
            spec.reps = sp_reps;
            spec.seed = sp_seed;
            spec.n = sp_n;
            spec.methods.clear();
            std::istringstream ms(sp_methods);
            for (std::string m; std::getline(ms, m, ',');) {
                const auto mm = sim_method_from_string(m);
                if (!mm) throw InvalidArgument("unknown method \"" + m + "\"");
                spec.methods.push_back(*mm);
            }
            spec.delta_grid.clear();
            if (!sp_grid.empty()) {
                std::istringstream gs(sp_grid);
                for (std::string pt; std::getline(gs, pt, ',');) {
                    const auto colon = pt.find(':');
                    if (colon == std::string::npos) throw InvalidArgument("--grid: expected dx:dy, got \"" + pt + "\"");
                    const auto dx = detail::parse_double(pt.substr(0, colon));
                    const auto dy = detail::parse_double(pt.substr(colon + 1));
                    if (!dx || !dy) throw InvalidArgument("--grid: not a number in \"" + pt + "\"");
                    spec.delta_grid.emplace_back(*dx, *dy);
                }
            } else {
                for (double d : cli_detail::parse_range(sp_diag, "--diagonal")) spec.delta_grid.emplace_back(d, d);
            }
            if (!sp_region.empty()) {
                auto r = load_region(sp_region);
                if (sp_derand) {
                    std::vector<WeightedRect> cells;
                    for (const auto& c : r.cells())
                        if (c.p >= 1.0) cells.push_back(c);
                    r = RejectionRegion2D(r.alpha(), r.kind(), std::move(cells), r.outside_rule());
                }
                spec.bayes_region = std::make_shared<const RejectionRegion2D>(std::move(r));
            }
            cli_detail::Emitter{out, out_path}.write(power_csv(simulate_power(spec)));
        };
    });

    auto* sim_ecdf = sim->add_subcommand("ecdf", "Null distribution of the p-values");
    std::int64_t se_reps = 10000;
    double se_dx = 0.0, se_dy = 0.0;
    int se_res = kDefaultPvalueResolution;
    std::uint64_t se_seed = 1;
    sim_ecdf->add_option("--reps", se_reps);
    sim_ecdf->add_option("--dx", se_dx);
    sim_ecdf->add_option("--dy", se_dy);
    sim_ecdf->add_option("--resolution", se_res);
    sim_ecdf->add_option("--seed", se_seed);
    sim_ecdf->callback([&] {
        action = [&] {
            cli_detail::Emitter{out, out_path}.write(ecdf_csv(simulate_pvalue_ecdf(se_reps, {se_dx, se_dy}, se_res, se_seed)));
        };
    });

    auto* sim_dens = sim->add_subcommand("sobel-density", "Draws of the Sobel statistic with delta_y = 0");
    std::string sd_dx = "0,0.1,0.2,0.3";
    int sd_n = 100;
    std::int64_t sd_reps = 10000;
    std::uint64_t sd_seed = 1;
    sim_dens->add_option("--delta-x", sd_dx, "Comma list of delta_x values");
    sim_dens->add_option("--n", sd_n);
    sim_dens->add_option("--reps", sd_reps);
    sim_dens->add_option("--seed", sd_seed);
    sim_dens->callback([&] {
        action = [&] {
            const auto dx = cli_detail::parse_list(sd_dx, "--delta-x");
            cli_detail::Emitter{out, out_path}.write(density_csv(sample_sobel_density(dx, sd_n, sd_reps, sd_seed)));
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }
    try {
        if (action) action();
        return 0;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace compnull
