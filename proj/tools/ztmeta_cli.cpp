// Command-line front end for the zero-truncated meta-analysis library.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <iostream>
#include <optional>
#include <string>

#include "ztmeta/report.hpp"

namespace fs = std::filesystem;
using namespace ztmeta;

namespace {

struct Options {
    std::string input = "data/peterhansel2013.csv";
    std::string format = "text";
    std::size_t replicates = 25000;
    std::uint64_t seed = 20130527;
    double level = 0.95;
    int tail = 4;
    unsigned threads = 0;
    std::string output_dir = ".";
    std::string strata = "default";
    std::string family;
    int lp = 0;
    bool truncated = false;
    bool grid = false;
    std::string write_csv;
};

Family parse_family(const std::string& s) {
    if (s == "poisson") return Family::Poisson;
    if (s == "negbin") return Family::NegBin;
    if (s == "binomial") return Family::Binomial;
    throw ParseError("unknown family '" + s + "' (expected poisson, negbin or binomial)");
}

std::optional<ModelSpec> model_override(const Options& o, bool default_truncated) {
    if (o.family.empty() && o.lp == 0) return std::nullopt;
    ModelSpec spec;
    spec.family = o.family.empty() ? Family::Poisson : parse_family(o.family);
    spec.lp = o.lp == 0 ? 1 : o.lp;
    spec.truncated = default_truncated || o.truncated;
    return spec;
}

BootstrapConfig bootstrap_config(const Options& o) {
    BootstrapConfig cfg;
    cfg.replicates = o.replicates;
    cfg.seed = o.seed;
    cfg.confidence_level = o.level;
    cfg.threads = o.threads;
    return cfg;
}

void emit(const Json& report, const Options& o) {
    if (o.format == "json") {
        std::cout << report.dump(2) << "\n";
    } else if (o.format == "csv") {
        for (const auto& [name, body] : render_csv_tables(report)) std::cout << "# " << name << "\n" << body;
    } else {
        std::cout << render_text(report);
    }
}

Dataset load_input(const Options& o) {
    if (!fs::exists(o.input)) throw StageError("load", "input file '" + o.input + "' does not exist");
    try {
        return load_csv(o.input);
    } catch (const Error& e) {
        throw StageError("load", o.input + ": " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StageError("output", "cannot write '" + path.string() + "'");
    out << body;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-truncated count models for meta-analyses that exclude zero-event studies"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-i,--input", o.input, "study CSV (id,person_years,prop_women,country,suicides)");
        sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv", "text"}));
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--family", o.family, "poisson, negbin or binomial")
            ->check(CLI::IsMember({"poisson", "negbin", "binomial"}));
        sub->add_option("--lp", o.lp, "linear predictor 1..5")->check(CLI::Range(1, 5));
    };
    auto add_bootstrap = [&](CLI::App* sub) {
        sub->add_option("--b", o.replicates, "bootstrap replicates")->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--level", o.level, "confidence level")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--threads", o.threads, "worker threads (default: ZTMETA_THREADS or all cores)");
    };

    auto* impute = app.add_subcommand("impute", "impute missing proportions of women");
    add_common(impute);
    impute->add_option("--write-csv", o.write_csv, "write the completed dataset to this CSV path");

    auto* fit = app.add_subcommand("fit", "fit one model, or the zero-truncated grid with --grid");
    add_common(fit);
    add_model(fit);
    fit->add_flag("--truncated", o.truncated, "zero-truncated likelihood");
    fit->add_flag("--grid", o.grid, "fit all 15 zero-truncated models");

    auto* gof = app.add_subcommand("gof", "observed vs fitted count frequencies and chi-square test");
    add_common(gof);
    add_model(gof);
    gof->add_option("--tail", o.tail, "pool counts at or above this value")->check(CLI::Range(2, 1000));

    auto* population = app.add_subcommand("population", "Horvitz-Thompson estimates of excluded studies");
    add_common(population);
    add_model(population);
    population->add_option("--strata", o.strata, "stratum set")->check(CLI::IsMember({"default"}));

    auto* bootstrap = app.add_subcommand("bootstrap", "model-averaged parametric bootstrap intervals");
    add_common(bootstrap);
    add_bootstrap(bootstrap);

    auto* report = app.add_subcommand("report", "run the whole analysis and write report.json");
    add_common(report);
    add_bootstrap(report);
    report->add_option("--tail", o.tail, "pool counts at or above this value")->check(CLI::Range(2, 1000));
    report->add_option("-o,--output-dir", o.output_dir, "directory for report.json and table CSVs");

    CLI11_PARSE(app, argc, argv);

    try {
        const Dataset raw = load_input(o);
        if (*impute) {
            const Json r = impute_report(raw);
            if (!o.write_csv.empty()) {
                std::ostringstream csv;
                write_csv(csv, prepare_dataset(raw).first);
                write_file(o.write_csv, csv.str());
            }
            emit(r, o);
        } else if (*fit) {
            if (o.grid) {
                emit(grid_report(raw), o);
            } else {
                const auto spec = model_override(o, false).value_or(ModelSpec{Family::Poisson, o.truncated, 1});
                emit(fit_report(raw, spec), o);
            }
        } else if (*gof) {
            emit(gof_report(raw, o.tail, model_override(o, true)), o);
        } else if (*population) {
            emit(population_report(raw, default_strata(), model_override(o, true)), o);
        } else if (*bootstrap) {
            emit(bootstrap_report(raw, bootstrap_config(o)), o);
        } else if (*report) {
            AnalysisOptions opts;
            opts.tail_threshold = o.tail;
            opts.confidence_level = o.level;
            opts.bootstrap = bootstrap_config(o);
            const Json r = full_report(raw, opts);
            const fs::path dir(o.output_dir);
            fs::create_directories(dir);
            write_file(dir / "report.json", r.dump(2) + "\n");
            if (o.format == "csv")
                for (const auto& [name, body] : render_csv_tables(r)) write_file(dir / (name + ".csv"), body);
            if (o.format == "text") std::cout << render_text(r);
            std::cerr << "wrote " << (dir / "report.json").string() << "\n";
        }
    } catch (const StageError& e) {
        std::cerr << "error " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
