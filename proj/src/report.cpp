#include "ztmeta/report.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "ztmeta/meta.hpp"

namespace ztmeta {

namespace {

constexpr double kPer100k = 1e5;

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

Json vec_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json header(const char* command) {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = command;
    return j;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string per100k(const Json& rate) { return rate.is_number() ? fmt("%.1f", rate.get<double>() * kPer100k) : "NA"; }

Json stratum_json(const StratumResult& r) {
    return {{"label", r.label},
            {"observed", r.observed},
            {"missing", r.missing},
            {"missing_rounded", round_count(r.missing)}};
}

Json population_json(const Dataset& ds, const FitResult& fit, const std::vector<StratumDef>& strata) {
    const PopulationEstimate pe = ht_estimate(ds, fit);
    Json j;
    j["model"] = fit.spec.label();
    j["total_N"] = pe.total_N;
    j["total_M"] = pe.total_M;
    j["total_N_rounded"] = round_count(pe.total_N);
    j["total_M_rounded"] = round_count(pe.total_M);
    Json per = Json::array();
    for (const auto& s : pe.per_study) per.push_back({{"id", s.id}, {"N", s.total}, {"M", s.missing}});
    j["per_study"] = per;
    Json cells = Json::array();
    for (const auto& r : stratify(pe, ds, strata)) cells.push_back(stratum_json(r));
    j["strata"] = cells;
    if (strata.size() == default_strata().size()) {
        const auto all = default_strata_with_margins();
        Json margins = Json::array();
        for (const auto& r : summarize_strata(pe, ds, {all.begin() + static_cast<long>(strata.size()), all.end()}))
            margins.push_back(stratum_json(r));
        j["margins"] = margins;
    }
    return j;
}

}  // namespace

std::pair<Dataset, std::optional<ImputationResult>> prepare_dataset(const Dataset& raw) {
    if (raw.complete()) return {raw, std::nullopt};
    auto [ds, imp] = impute_prop_women(raw);
    return {std::move(ds), std::move(imp)};
}

const FitResult& preferred_model(const std::vector<FitResult>& count_fits) {
    const int sel = select_by_bic(count_fits);
    if (sel < 0) throw PreconditionError("no count model converged");
    return count_fits[static_cast<std::size_t>(sel)];
}

Json to_json(const FitResult& fit) {
    Json j;
    j["model"] = fit.spec.label();
    j["family"] = std::string(family_name(fit.spec.family));
    j["truncated"] = fit.spec.truncated;
    j["lp"] = fit.spec.lp;
    j["beta"] = vec_json(fit.beta);
    j["se_beta"] = vec_json(fit.se_beta);
    j["alpha"] = fit.alpha ? Json(*fit.alpha) : Json(nullptr);
    j["dispersion_at_bound"] = fit.dispersion_at_bound;
    j["loglik"] = fit.loglik;
    j["k"] = fit.k;
    j["bic"] = fit.bic;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    if (!fit.message.empty()) j["message"] = fit.message;
    if (fit.converged && fit.beta.size() == 1) j["rate"] = predict_rate(fit, 0.0, 0.0);
    return j;
}

Json to_json(const ImputationResult& imp) {
    Json j;
    j["imputed_value"] = imp.imputed_value;
    Json filled = Json::array();
    for (std::size_t k = 0; k < imp.imputed_ids.size(); ++k)
        filled.push_back({{"id", imp.imputed_ids[k]}, {"prop_women", imp.imputed_values[k]}});
    j["imputed"] = filled;
    j["selected_terms"] = imp.selected_terms;
    j["coefficients"] = imp.coefficients;
    j["bic"] = imp.bic;
    Json cands = Json::array();
    for (const auto& c : imp.candidates) cands.push_back({{"terms", c.terms}, {"bic", c.bic}});
    j["candidates"] = cands;
    return j;
}

Json to_json(const FrequencyTable& table, const ChiSquareResult& chi) {
    Json j;
    j["tail_threshold"] = table.tail_threshold;
    Json bins = Json::array();
    for (const auto& b : table.bins) bins.push_back({{"label", b.label}, {"observed", b.observed}, {"fitted", b.fitted}});
    j["bins"] = bins;
    j["chi_square"] = chi.statistic;
    j["dof"] = chi.dof;
    j["p_value"] = chi.p_value;
    return j;
}

Json to_json(const Interval& iv) { return {{"label", iv.label}, {"lower", iv.lower}, {"upper", iv.upper}}; }

Json to_json(const BootstrapSummary& s, const BootstrapConfig& cfg) {
    Json j;
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["confidence_level"] = cfg.confidence_level;
    Json rates = Json::array();
    for (std::size_t k = 0; k < s.rate_intervals.size(); ++k) {
        Json r = to_json(s.rate_intervals[k]);
        r["prop_women"] = cfg.subpopulations[k].prop_women;
        r["usa"] = cfg.subpopulations[k].usa;
        rates.push_back(r);
    }
    j["rate_intervals"] = rates;
    j["N_interval"] = to_json(s.N_interval_total);
    j["missing_interval"] = to_json(s.missing_interval_total);
    Json strata = Json::array();
    for (const auto& iv : s.strata_intervals) strata.push_back(to_json(iv));
    j["strata_intervals"] = strata;
    const auto grid = count_model_grid();
    Json gen = Json::object(), sel = Json::object();
    for (std::size_t l = 0; l < grid.size(); ++l) {
        gen[grid[l].label()] = s.diagnostics.generating_counts[l];
        sel[grid[l].label()] = s.diagnostics.selected_counts[l];
    }
    j["diagnostics"] = {{"generating_counts", gen},
                        {"selected_counts", sel},
                        {"failed_refits", s.diagnostics.failed_refits},
                        {"discarded_replicates", s.diagnostics.discarded_replicates},
                        {"warning", s.diagnostics.warning}};
    return j;
}

Json impute_report(const Dataset& raw) {
    Json j = header("impute");
    auto [ds, imp] = run_stage("impute", [&] { return impute_prop_women(raw); });
    j["imputation"] = to_json(imp);
    return j;
}

Json fit_report(const Dataset& raw, const ModelSpec& spec) {
    Json j = header("fit");
    const Dataset ds = run_stage("impute", [&] { return prepare_dataset(raw).first; });
    const FitResult fit = run_stage("fit", [&] { return fit_model(RegressionData::from(ds), spec); });
    j["fit"] = to_json(fit);
    return j;
}

Json grid_report(const Dataset& raw) {
    Json j = header("grid");
    const Dataset ds = run_stage("impute", [&] { return prepare_dataset(raw).first; });
    const auto fits = run_stage("fit", [&] { return fit_grid(ds, full_truncated_grid()); });
    Json arr = Json::array();
    for (const auto& f : fits) arr.push_back(to_json(f));
    j["zt_grid"] = arr;
    return j;
}

Json gof_report(const Dataset& raw, int tail_threshold, const std::optional<ModelSpec>& spec) {
    Json j = header("gof");
    const Dataset ds = run_stage("impute", [&] { return prepare_dataset(raw).first; });
    const RegressionData data = RegressionData::from(ds);
    const FitResult fit = run_stage("fit", [&] {
        return spec ? fit_model(data, *spec) : preferred_model(fit_grid(data, count_model_grid()));
    });
    run_stage("gof", [&] {
        const auto table = fitted_frequencies(data, fit, tail_threshold);
        const auto chi = chi_square_test(table, fit.k);
        j["gof"] = to_json(table, chi);
        j["gof"]["model"] = fit.spec.label();
        return 0;
    });
    return j;
}

Json population_report(const Dataset& raw, const std::vector<StratumDef>& strata, const std::optional<ModelSpec>& spec) {
    Json j = header("population");
    const Dataset ds = run_stage("impute", [&] { return prepare_dataset(raw).first; });
    const RegressionData data = RegressionData::from(ds);
    const FitResult fit = run_stage("fit", [&] {
        return spec ? fit_model(data, *spec) : preferred_model(fit_grid(data, count_model_grid()));
    });
    j["population"] = run_stage("population", [&] { return population_json(ds, fit, strata); });
    return j;
}

Json bootstrap_report(const Dataset& raw, const BootstrapConfig& cfg) {
    Json j = header("bootstrap");
    const Dataset ds = run_stage("impute", [&] { return prepare_dataset(raw).first; });
    const auto fits = run_stage("fit", [&] { return fit_count_models(RegressionData::from(ds)); });
    j["bootstrap"] = run_stage("bootstrap", [&] { return to_json(run_bootstrap(ds, fits, cfg), cfg); });
    return j;
}

Json full_report(const Dataset& raw, const AnalysisOptions& opts) {
    Json j = header("report");
    auto [ds, imp] = run_stage("impute", [&] { return prepare_dataset(raw); });
    j["imputation"] = imp ? to_json(*imp) : Json(nullptr);
    j["n_studies"] = ds.size();

    run_stage("naive", [&] {
        j["naive_linear"] = pooled_rate_linear(ds).rate;
        j["naive_log"] = pooled_rate_log(ds).rate;
        return 0;
    });

    const RegressionData data = RegressionData::from(ds);
    run_stage("glm", [&] {
        Json glm = Json::object();
        for (Family f : {Family::Poisson, Family::NegBin}) {
            const auto fits = fit_grid(data, untruncated_grid(f));
            Json arr = Json::array();
            for (const auto& fit : fits) arr.push_back(to_json(fit));
            glm[std::string(family_name(f))] = arr;
            if (f == Family::Poisson) {
                const FitResult& best = preferred_model(fits);
                glm["poisson_best_lp"] = best.spec.lp;
                Json rates = Json::object();
                rates["usa"] = predict_rate(best, 0.0, 1.0);
                rates["other"] = predict_rate(best, 0.0, 0.0);
                if (best.spec.lp == 3) glm["poisson_best_rates"] = rates;
            }
        }
        j["glm_grid"] = glm;
        return 0;
    });

    const auto zt = run_stage("zt_fit", [&] { return fit_grid(data, full_truncated_grid()); });
    const std::vector<FitResult> count_fits(zt.begin(), zt.begin() + static_cast<long>(count_model_grid().size()));
    Json zt_arr = Json::array();
    for (const auto& f : zt) zt_arr.push_back(to_json(f));
    j["zt_grid"] = zt_arr;

    const FitResult& best = run_stage("zt_fit", [&]() -> const FitResult& { return preferred_model(count_fits); });
    j["best_model"] = best.spec.label();
    run_stage("bic_weights", [&] {
        const BicWeights w = bic_weights(count_fits);
        Json arr = Json::array();
        for (std::size_t l = 0; l < count_fits.size(); ++l)
            arr.push_back({{"model", count_fits[l].spec.label()}, {"weight", w.weights[l]}});
        j["bic_weights"] = arr;
        return 0;
    });
    const FitResult& intercept_only = count_fits.front();
    j["zt_rate"] = predict_rate(intercept_only, 0.0, 0.0);

    run_stage("gof", [&] {
        const auto table = fitted_frequencies(data, best, opts.tail_threshold);
        const auto chi = chi_square_test(table, best.k);
        j["gof"] = to_json(table, chi);
        j["gof"]["model"] = best.spec.label();
        return 0;
    });

    run_stage("wald", [&] {
        const auto [lo, hi] = wald_interval(intercept_only, opts.confidence_level);
        j["wald"] = {{"model", intercept_only.spec.label()},
                     {"confidence_level", opts.confidence_level},
                     {"lower", lo},
                     {"upper", hi}};
        return 0;
    });

    run_stage("population", [&] {
        j["population"] = population_json(ds, best, opts.strata);
        j["total_N"] = j["population"]["total_N_rounded"];
        j["total_missing"] = j["population"]["total_M_rounded"];
        return 0;
    });

    if (opts.run_bootstrap) {
        j["bootstrap"] = run_stage("bootstrap", [&] {
            return to_json(run_bootstrap(ds, fit_count_models(data), opts.bootstrap), opts.bootstrap);
        });
    } else {
        j["bootstrap"] = nullptr;
    }
    return j;
}

namespace {

void text_fit_row(std::ostringstream& os, const Json& f) {
    os << "  " << f["model"].get<std::string>() << ": loglik " << fmt("%.3f", f["loglik"].get<double>()) << ", k "
       << f["k"].get<int>() << ", BIC " << fmt("%.3f", f["bic"].get<double>()) << ", beta (";
    bool first = true;
    for (const auto& b : f["beta"]) {
        os << (first ? "" : ", ") << fmt("%.4f", b.get<double>());
        first = false;
    }
    os << ")";
    if (f["alpha"].is_number()) os << ", alpha " << fmt("%.4g", f["alpha"].get<double>());
    if (f.contains("rate")) os << ", rate " << per100k(f["rate"]) << " per 100k";
    if (!f["converged"].get<bool>()) os << " [not converged]";
    os << "\n";
}

void text_imputation(std::ostringstream& os, const Json& imp) {
    os << "Imputation\n";
    for (const auto& f : imp["imputed"])
        os << "  " << f["id"].get<std::string>() << ": prop_women = " << fmt("%.4f", f["prop_women"].get<double>())
           << "\n";
    os << "  selected terms:";
    for (const auto& t : imp["selected_terms"]) os << " " << t.get<std::string>();
    os << "\n  BIC " << fmt("%.4f", imp["bic"].get<double>()) << "\n";
}

void text_gof(std::ostringstream& os, const Json& g) {
    os << "Goodness of fit (" << g["model"].get<std::string>() << ")\n  count    observed  fitted\n";
    for (const auto& b : g["bins"])
        os << "  " << b["label"].get<std::string>() << "\t"
           << fmt("%.0f", b["observed"].get<double>()) << "\t" << fmt("%.3f", b["fitted"].get<double>()) << "\n";
    os << "  chi-square " << fmt("%.3f", g["chi_square"].get<double>()) << " on " << g["dof"].get<int>()
       << " dof, p = " << fmt("%.3f", g["p_value"].get<double>()) << "\n";
}

void text_population(std::ostringstream& os, const Json& p) {
    os << "Horvitz-Thompson (" << p["model"].get<std::string>() << ")\n  total studies "
       << fmt("%.2f", p["total_N"].get<double>()) << " (" << p["total_N_rounded"].get<long long>() << "), missing "
       << fmt("%.2f", p["total_M"].get<double>()) << " (" << p["total_M_rounded"].get<long long>() << ")\n";
    auto rows = [&](const Json& arr) {
        for (const auto& s : arr)
            os << "  " << s["label"].get<std::string>() << ": " << s["missing_rounded"].get<long long>() << " ["
               << s["observed"].get<std::size_t>() << "]  (" << fmt("%.3f", s["missing"].get<double>()) << ")\n";
    };
    rows(p["strata"]);
    if (p.contains("margins")) rows(p["margins"]);
}

void text_bootstrap(std::ostringstream& os, const Json& b) {
    os << "Bootstrap (" << b["replicates"].get<std::size_t>() << " replicates, seed " << b["seed"].get<std::uint64_t>()
       << ", level " << fmt("%.3f", b["confidence_level"].get<double>()) << ")\n";
    for (const auto& r : b["rate_intervals"])
        os << "  rate " << r["label"].get<std::string>() << ": (" << per100k(r["lower"]) << ", " << per100k(r["upper"])
           << ") per 100k\n";
    auto iv = [&](const Json& x) {
        os << "  " << x["label"].get<std::string>() << ": (" << fmt("%.1f", x["lower"].get<double>()) << ", "
           << fmt("%.1f", x["upper"].get<double>()) << ")\n";
    };
    iv(b["N_interval"]);
    iv(b["missing_interval"]);
    for (const auto& s : b["strata_intervals"]) iv(s);
    if (!b["diagnostics"]["warning"].get<std::string>().empty())
        os << "  warning: " << b["diagnostics"]["warning"].get<std::string>() << "\n";
}

}  // namespace

std::string render_text(const Json& r) {
    std::ostringstream os;
    if (r.contains("imputation") && r["imputation"].is_object()) text_imputation(os, r["imputation"]);
    if (r.contains("naive_linear"))
        os << "Pooled rates per 100k: linear " << per100k(r["naive_linear"]) << ", log-scale "
           << per100k(r["naive_log"]) << "\n";
    if (r.contains("glm_grid")) {
        os << "Untruncated GLMs\n";
        for (const char* fam : {"poisson", "negbin"})
            for (const auto& f : r["glm_grid"][fam]) text_fit_row(os, f);
        if (r["glm_grid"].contains("poisson_best_rates"))
            os << "  best Poisson lp " << r["glm_grid"]["poisson_best_lp"].get<int>() << ": USA "
               << per100k(r["glm_grid"]["poisson_best_rates"]["usa"]) << ", other "
               << per100k(r["glm_grid"]["poisson_best_rates"]["other"]) << " per 100k\n";
    }
    if (r.contains("fit")) {
        os << "Fit\n";
        text_fit_row(os, r["fit"]);
    }
    if (r.contains("zt_grid")) {
        os << "Zero-truncated models\n";
        for (const auto& f : r["zt_grid"]) text_fit_row(os, f);
    }
    if (r.contains("bic_weights")) {
        os << "BIC weights\n";
        for (const auto& w : r["bic_weights"])
            os << "  " << w["model"].get<std::string>() << ": " << fmt("%.4f", w["weight"].get<double>()) << "\n";
    }
    if (r.contains("gof")) text_gof(os, r["gof"]);
    if (r.contains("wald"))
        os << "Wald interval (" << r["wald"]["model"].get<std::string>() << "): (" << per100k(r["wald"]["lower"]) << ", "
           << per100k(r["wald"]["upper"]) << ") per 100k\n";
    if (r.contains("population")) text_population(os, r["population"]);
    if (r.contains("bootstrap") && r["bootstrap"].is_object()) text_bootstrap(os, r["bootstrap"]);
    return os.str();
}

std::vector<std::pair<std::string, std::string>> render_csv_tables(const Json& r) {
    std::vector<std::pair<std::string, std::string>> out;
    auto num = [](const Json& v) { return v.is_number() ? v.dump() : std::string(); };
    if (r.contains("zt_grid")) {
        std::ostringstream os;
        os << "model,family,lp,loglik,k,bic,bic_weight\n";
        std::map<std::string, double> weights;
        if (r.contains("bic_weights"))
            for (const auto& w : r["bic_weights"]) weights[w["model"].get<std::string>()] = w["weight"].get<double>();
        for (const auto& f : r["zt_grid"]) {
            const auto model = f["model"].get<std::string>();
            os << model << ',' << f["family"].get<std::string>() << ',' << f["lp"].get<int>() << ',' << num(f["loglik"])
               << ',' << f["k"].get<int>() << ',' << num(f["bic"]) << ',';
            if (auto it = weights.find(model); it != weights.end()) os << Json(it->second).dump();
            os << '\n';
        }
        out.emplace_back("table3", os.str());
    }
    if (r.contains("gof")) {
        std::ostringstream os;
        os << "count,observed,fitted\n";
        for (const auto& b : r["gof"]["bins"])
            os << b["label"].get<std::string>() << ',' << num(b["observed"]) << ',' << num(b["fitted"]) << '\n';
        out.emplace_back("table4", os.str());
    }
    if (r.contains("bootstrap") && r["bootstrap"].is_object()) {
        std::ostringstream os;
        os << "subpopulation,prop_women,usa,lower,upper\n";
        for (const auto& iv : r["bootstrap"]["rate_intervals"])
            os << iv["label"].get<std::string>() << ',' << num(iv["prop_women"]) << ',' << num(iv["usa"]) << ','
               << num(iv["lower"]) << ',' << num(iv["upper"]) << '\n';
        out.emplace_back("table5", os.str());
    }
    if (r.contains("population")) {
        std::ostringstream os;
        os << "stratum,observed,missing,missing_rounded,lower,upper\n";
        std::map<std::string, Json> ivs;
        if (r.contains("bootstrap") && r["bootstrap"].is_object())
            for (const auto& iv : r["bootstrap"]["strata_intervals"]) ivs[iv["label"].get<std::string>()] = iv;
        auto emit = [&](const Json& arr) {
            for (const auto& s : arr) {
                const auto label = s["label"].get<std::string>();
                os << label << ',' << s["observed"].get<std::size_t>() << ',' << num(s["missing"]) << ','
                   << s["missing_rounded"].get<long long>() << ',';
                if (auto it = ivs.find(label); it != ivs.end())
                    os << num(it->second["lower"]) << ',' << num(it->second["upper"]);
                else
                    os << ',';
                os << '\n';
            }
        };
        emit(r["population"]["strata"]);
        if (r["population"].contains("margins")) emit(r["population"]["margins"]);
        out.emplace_back("table6", os.str());
    }
    return out;
}

}  // namespace ztmeta
