// Command-line front end. Every subcommand writes one CSV (or JSON) table to --out or
// stdout; all randomness is controlled by --seed and the output is byte-identical for
// any --threads value.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpbridge/asymptotics.hpp"
#include "fpbridge/boundaries.hpp"
#include "fpbridge/cascade.hpp"
#include "fpbridge/density_kernel.hpp"
#include "fpbridge/estimators.hpp"
#include "fpbridge/io.hpp"
#include "fpbridge/version.hpp"
#include "fpbridge/walk_sim.hpp"

namespace {

using namespace fpbridge;

struct CommonOpts {
    std::string out;
    std::string format = "csv";
    std::uint64_t seed = 1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--out", c.out, "output file (default: stdout)");
    cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--threads", c.threads, "worker thread count (0 = leave default)");
}

void emit(const OutputTable& t, const CommonOpts& c) {
    std::ostringstream buf;
    if (c.format == "json")
        write_json(buf, t);
    else
        write_csv(buf, t);
    if (c.out.empty()) {
        std::cout << buf.str();
    } else {
        std::ofstream f(c.out, std::ios::binary);
        if (!f) throw ValidationError("cannot open output file " + c.out);
        f << buf.str();
    }
}

std::vector<std::uint64_t> parse_u64_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoull(tok));
    }
    if (out.empty()) throw ValidationError("empty integer list: " + text);
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ValidationError("empty number list: " + text);
    return out;
}

Method parse_method(const std::string& s) {
    if (s == "bridge") return Method::bridge_direct;
    if (s == "weighted") return Method::weighted;
    if (s == "window") return Method::window;
    if (s == "kernel") return Method::kernel;
    throw ValidationError("unknown method: " + s);
}

// "frac:0.5" -> k = round(0.5 n);  "pow:0.6" -> k = n - ceil(n^0.6)
void parse_k_rule(const std::string& text, SweepSpec& spec) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ValidationError("k rule must be frac:<f> or pow:<p>");
    const std::string fam = text.substr(0, colon);
    const double val = std::stod(text.substr(colon + 1));
    if (fam == "frac")
        spec.k_rule = KRule::fraction;
    else if (fam == "pow")
        spec.k_rule = KRule::n_minus_power;
    else
        throw ValidationError("k rule must be frac:<f> or pow:<p>");
    spec.k_param = val;
}

int run(int argc, char** argv) {
    CLI::App app{"first-passage asymptotics lab for random-walk bridges over moving boundaries"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // --- survival ------------------------------------------------------------------
    auto* sv = app.add_subcommand("survival", "estimate P(tau_g > k | S_n = 0) by Monte Carlo");
    CommonOpts sv_c;
    std::string sv_model = "gaussian", sv_boundary = "constant:-1", sv_method = "bridge";
    std::uint64_t sv_n = 0, sv_k = 0, sv_reps = 100000;
    double sv_delta = 0.1;
    std::uint64_t sv_nodes = 0;
    sv->add_option("--model", sv_model, "gaussian | exponential | uniform");
    sv->add_option("--boundary", sv_boundary, "constant:c | power:c,a | log:c | csv:path");
    sv->add_option("--n", sv_n, "bridge length")->required();
    sv->add_option("--k", sv_k, "survival horizon")->required();
    sv->add_option("--reps", sv_reps, "Monte Carlo replicates");
    sv->add_option("--method", sv_method, "bridge | weighted | window | kernel");
    sv->add_option("--delta", sv_delta, "window half-width (window method only)");
    sv->add_option("--grid-nodes", sv_nodes, "kernel grid resolution (kernel/weighted)");
    add_common(sv, sv_c);

    // --- oracle --------------------------------------------------------------------
    auto* orc = app.add_subcommand("oracle", "compute P(tau_g > k | S_n = 0) by density propagation");
    CommonOpts orc_c;
    std::string orc_model = "gaussian", orc_boundary = "constant:-1";
    std::uint64_t orc_n = 0, orc_k = 0, orc_nodes = 0;
    double orc_h = 0.0;
    orc->add_option("--model", orc_model);
    orc->add_option("--boundary", orc_boundary);
    orc->add_option("--n", orc_n)->required();
    orc->add_option("--k", orc_k)->required();
    orc->add_option("--grid-nodes", orc_nodes, "target node count per epoch");
    orc->add_option("--grid-h", orc_h, "lattice spacing cap (0 = model default)");
    add_common(orc, orc_c);

    // --- sweep ---------------------------------------------------------------------
    auto* sw = app.add_subcommand("sweep", "estimate/prediction ratios across a range of n");
    CommonOpts sw_c;
    std::string sw_model = "gaussian", sw_boundary = "constant:-1", sw_regime = "far";
    std::string sw_nlist, sw_krule = "frac:0.5", sw_method = "bridge";
    std::uint64_t sw_reps = 100000, sw_lg_reps = 200000, sw_lg_k = 0, sw_nodes = 0;
    sw->add_option("--model", sw_model);
    sw->add_option("--boundary", sw_boundary);
    sw->add_option("--regime", sw_regime, "far | near_small | near_critical | near_large");
    sw->add_option("--n", sw_nlist, "comma-separated bridge lengths")->required();
    sw->add_option("--k,--k-rule", sw_krule, "frac:<f> or pow:<p>");
    sw->add_option("--method", sw_method, "bridge | weighted | window | kernel");
    sw->add_option("--reps", sw_reps);
    sw->add_option("--lg-reps", sw_lg_reps, "replicates for the prefactor estimate");
    sw->add_option("--lg-k", sw_lg_k, "horizon for the prefactor estimate (0 = row's k)");
    sw->add_option("--grid-nodes", sw_nodes);
    add_common(sw, sw_c);

    // --- ladder --------------------------------------------------------------------
    auto* ld = app.add_subcommand("ladder", "renewal tables and first-descent moments");
    CommonOpts ld_c;
    std::string ld_model = "gaussian";
    std::uint64_t ld_paths = 100000, ld_cap = 1000000;
    double ld_grid = 4.0;
    std::size_t ld_bins = 256;
    ld->add_option("--model", ld_model);
    ld->add_option("--paths", ld_paths);
    ld->add_option("--grid-max", ld_grid, "table support [0, grid_max]");
    ld->add_option("--bins", ld_bins);
    ld->add_option("--step-cap", ld_cap, "per-path step budget");
    add_common(ld, ld_c);

    // --- lg ------------------------------------------------------------------------
    auto* lg = app.add_subcommand("lg", "estimate the boundary prefactor both ways");
    CommonOpts lg_c;
    std::string lg_model = "gaussian", lg_boundary = "constant:-1";
    std::uint64_t lg_k = 0, lg_reps = 200000;
    lg->add_option("--model", lg_model);
    lg->add_option("--boundary", lg_boundary);
    lg->add_option("--k", lg_k, "kill horizon")->required();
    lg->add_option("--reps", lg_reps);
    add_common(lg, lg_c);

    // --- rayleigh ------------------------------------------------------------------
    auto* ry = app.add_subcommand("rayleigh", "endpoint law of survivors vs exp(-v^2/2)");
    CommonOpts ry_c;
    std::string ry_model = "gaussian", ry_boundary = "constant:0", ry_vlist = "0.5,1,2";
    std::uint64_t ry_n = 0, ry_reps = 1000000;
    ry->add_option("--model", ry_model);
    ry->add_option("--boundary", ry_boundary);
    ry->add_option("--n", ry_n)->required();
    ry->add_option("--v", ry_vlist, "comma-separated scaled thresholds");
    ry->add_option("--reps", ry_reps);
    add_common(ry, ry_c);

    // --- cascade -------------------------------------------------------------------
    auto* ca = app.add_subcommand("cascade", "default cascade tail vs walk bridge vs prediction");
    CommonOpts ca_c;
    std::uint64_t ca_n = 0, ca_k = 0, ca_reps = 200000, ca_nodes = 0;
    double ca_theta = 1.0;
    std::string ca_perturb = "none", ca_config;
    ca->add_option("--n", ca_n, "number of agents");
    ca->add_option("--theta", ca_theta, "initial shock size");
    ca->add_option("--perturb", ca_perturb, "none | constant:c | power:c,a");
    ca->add_option("--k", ca_k, "tail threshold")->required();
    ca->add_option("--reps", ca_reps);
    ca->add_option("--config", ca_config, "key=value file with n, theta, perturb (flags win)");
    ca->add_option("--grid-nodes", ca_nodes);
    add_common(ca, ca_c);

    // --- identities ----------------------------------------------------------------
    auto* id = app.add_subcommand("identities", "closed forms vs adaptive quadrature");
    CommonOpts id_c;
    add_common(id, id_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the message; bad flags count as validation failures
        return 2;
    }

    auto grid_of = [](std::uint64_t nodes, double h = 0.0) {
        GridConfig g;
        if (nodes) g.target_nodes = nodes;
        if (h > 0.0) g.h_max = h;
        return g;
    };

    if (sv->parsed()) {
        if (sv_c.threads > 0) set_threads(sv_c.threads);
        IncrementModel model = make_model(sv_model);
        BoundarySequence g = BoundarySequence::parse(sv_boundary);
        EstimateRecord rec;
        const Method m = parse_method(sv_method);
        switch (m) {
            case Method::bridge_direct:
                rec = estimate_conditional_survival_bridge(model, g, sv_n, sv_k, sv_reps, sv_c.seed);
                break;
            case Method::weighted:
                rec = estimate_conditional_survival_weighted(model, g, sv_n, sv_k, sv_reps,
                                                             sv_c.seed, grid_of(sv_nodes));
                break;
            case Method::window:
                rec = estimate_conditional_survival_window(model, g, sv_n, sv_k, sv_reps,
                                                           sv_c.seed, sv_delta);
                break;
            case Method::kernel: {
                BridgeKernelResult kr = bridge_survival(model, g, sv_n, sv_k, grid_of(sv_nodes));
                rec.value = kr.probability;
                rec.method = Method::kernel;
                rec.quadrature_loss = kr.max_step_discrepancy;
                rec.seed = sv_c.seed;
                break;
            }
        }
        OutputTable t;
        t.columns = {"model", "boundary", "n", "k"};
        for (const auto& c : record_columns()) t.columns.push_back(c);
        t.add_meta("seed", std::to_string(sv_c.seed));
        append_record_row(t, rec, {sv_model, sv_boundary, sv_n, sv_k});
        emit(t, sv_c);
    } else if (orc->parsed()) {
        if (orc_c.threads > 0) set_threads(orc_c.threads);
        IncrementModel model = make_model(orc_model);
        BoundarySequence g = BoundarySequence::parse(orc_boundary);
        BridgeKernelResult kr = bridge_survival(model, g, orc_n, orc_k, grid_of(orc_nodes, orc_h));
        OutputTable t;
        t.columns = {"model", "boundary", "n", "k", "probability", "numerator", "fn0",
                     "max_step_discrepancy"};
        t.add_meta("seed", std::to_string(orc_c.seed));
        t.add_row({orc_model, orc_boundary, orc_n, orc_k, kr.probability, kr.numerator, kr.fn0,
                   kr.max_step_discrepancy});
        emit(t, orc_c);
    } else if (sw->parsed()) {
        if (sw_c.threads > 0) set_threads(sw_c.threads);
        SweepSpec spec;
        spec.model_name = sw_model;
        spec.boundary_text = sw_boundary;
        spec.regime = parse_regime(sw_regime);
        spec.n_values = parse_u64_list(sw_nlist);
        parse_k_rule(sw_krule, spec);
        spec.method = parse_method(sw_method);
        spec.reps = sw_reps;
        spec.lg_reps = sw_lg_reps;
        spec.lg_k = sw_lg_k;
        spec.master_seed = sw_c.seed;
        spec.grid = grid_of(sw_nodes);
        auto rows = convergence_sweep(spec);
        OutputTable t = sweep_table(rows, sw_model, sw_boundary);
        t.add_meta("seed", std::to_string(sw_c.seed));
        emit(t, sw_c);
        for (const auto& r : rows)
            if (!r.error.empty())
                std::cerr << "row n=" << r.n << " failed: " << r.error << "\n";
    } else if (ld->parsed()) {
        if (ld_c.threads > 0) set_threads(ld_c.threads);
        IncrementModel model = make_model(ld_model);
        LadderStats st = estimate_ladder_stats(model, ld_paths, ld_grid, ld_c.seed, ld_bins, ld_cap);
        OutputTable t;
        t.columns = {"t", "u", "v"};
        t.add_meta("seed", std::to_string(ld_c.seed));
        t.add_meta("mean_descending", format_double(st.mean_descending));
        t.add_meta("se_descending", format_double(st.se_descending));
        t.add_meta("mean_ascending_dual", format_double(st.mean_ascending_dual));
        t.add_meta("se_ascending_dual", format_double(st.se_ascending_dual));
        t.add_meta("product", format_double(st.product()));
        t.add_meta("product_se", format_double(st.product_se));
        t.add_meta("capped_fraction", format_double(st.capped_fraction));
        t.add_meta("cap_warning", st.cap_warning ? "true" : "false");
        const double dt = st.grid_max / static_cast<double>(st.u_table.size() - 1);
        for (std::size_t j = 0; j < st.u_table.size(); ++j)
            t.add_row({dt * static_cast<double>(j), st.u_table[j], st.v_table[j]});
        emit(t, ld_c);
        if (st.cap_warning)
            std::cerr << "warning: " << st.capped_fraction * 100.0
                      << "% of paths hit the step cap; tables are biased low\n";
    } else if (lg->parsed()) {
        if (lg_c.threads > 0) set_threads(lg_c.threads);
        IncrementModel model = make_model(lg_model);
        BoundarySequence g = BoundarySequence::parse(lg_boundary);
        LgEstimate est = estimate_Lg(model, g, lg_k, lg_reps, lg_c.seed);
        OutputTable t;
        t.columns = {"model", "boundary", "k", "form"};
        for (const auto& c : record_columns()) t.columns.push_back(c);
        t.add_meta("seed", std::to_string(lg_c.seed));
        append_record_row(t, est.undershoot, {lg_model, lg_boundary, lg_k, "undershoot"});
        append_record_row(t, est.definition, {lg_model, lg_boundary, lg_k, "definition"});
        emit(t, lg_c);
    } else if (ry->parsed()) {
        if (ry_c.threads > 0) set_threads(ry_c.threads);
        IncrementModel model = make_model(ry_model);
        BoundarySequence g = BoundarySequence::parse(ry_boundary);
        auto vs = parse_double_list(ry_vlist);
        OutputTable t;
        t.columns = {"model", "boundary", "n", "v", "predicted"};
        for (const auto& c : record_columns()) t.columns.push_back(c);
        t.add_meta("seed", std::to_string(ry_c.seed));
        for (std::size_t i = 0; i < vs.size(); ++i) {
            EstimateRecord rec = estimate_rayleigh_tail(model, g, ry_n, vs[i], ry_reps,
                                                        mix_seed(ry_c.seed, i));
            append_record_row(t, rec, {ry_model, ry_boundary, ry_n, vs[i], rayleigh_tail(vs[i])});
        }
        emit(t, ry_c);
    } else if (ca->parsed()) {
        if (ca_c.threads > 0) set_threads(ca_c.threads);
        CascadeConfig cfg;
        if (!ca_config.empty()) cfg = parse_cascade_config(parse_key_value_file(ca_config));
        if (ca_n) cfg.n = ca_n;
        if (ca->count("--theta")) cfg.theta = ca_theta;
        if (ca->count("--perturb")) cfg = parse_cascade_perturbation(std::move(cfg), ca_perturb);
        cfg.validate();
        CascadeComparison cmp = cascade_vs_bridge(cfg, ca_k, ca_reps, ca_c.seed, grid_of(ca_nodes));
        OutputTable t;
        t.columns = {"n", "theta", "perturb", "k", "mc", "mc_se", "bridge", "bridge_se",
                     "exact", "asymptotic", "l_used", "seed"};
        t.add_meta("seed", std::to_string(ca_c.seed));
        t.add_row({cfg.n, cfg.theta, cfg.perturb_desc, ca_k, cmp.mc.record.value,
                   cmp.mc.record.std_error, cmp.bridge.value, cmp.bridge.std_error, cmp.exact,
                   cmp.asymptotic, cmp.l_used, ca_c.seed});
        emit(t, ca_c);
    } else if (id->parsed()) {
        IdentityCheckReport rep = check_integral_identities();
        OutputTable t;
        t.columns = {"lemma", "p1", "p2", "p3", "closed_form", "quadrature", "rel_error"};
        t.add_meta("max_rel_error", format_double(rep.max_rel_error));
        for (const auto& r : rep.rows)
            t.add_row({r.lemma, r.p1, r.p2, r.p3, r.closed, r.quad, r.rel_err});
        emit(t, id_c);
        std::cerr << "max relative error " << format_double(rep.max_rel_error) << " over "
                  << rep.rows.size() << " identities\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const fpbridge::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fpbridge::NumericsError& e) {
        std::cerr << "numerics error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
