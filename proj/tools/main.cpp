// Command-line front end: validate | entropy | vendi | spectrum | sweep |
// search | bench. Exit codes: 0 success, 2 validation failure, 3 violated
// proven bound, 4 counterexample candidate.

#include "simdiv/simdiv.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace simdiv;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitProvenBoundViolated = 3;
constexpr int kExitCandidate = 4;

struct CommonOptions {
    std::vector<std::string> inputs;
    std::string kind = "features_csv";
    std::string k_text;
    std::string q_text = "1";
    std::vector<std::string> extra_id_columns;
    std::optional<std::int64_t> subsample;
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "csv";
    std::string counts_path;
    std::string findings_path = "findings.jsonl";
};

void add_common_options(CLI::App* cmd, CommonOptions& opts, bool multi_input) {
    if (multi_input) {
        cmd->add_option("--input", opts.inputs, "Input CSV path(s)")->required();
    } else {
        opts.inputs.resize(1);
        cmd->add_option("--input", opts.inputs[0], "Input CSV path")->required();
    }
    cmd->add_option("--kind", opts.kind, "Input kind")
        ->check(CLI::IsMember({"features_csv", "distance_csv", "similarity_csv"}));
    cmd->add_option("--k", opts.k_text, "Kernel rate (positive float or 'rmsd')");
    cmd->add_option("--q", opts.q_text, "Comma-separated orders (inf/-inf allowed)");
    cmd->add_option("--id-columns", opts.extra_id_columns,
                    "Extra identifier column names to drop");
    cmd->add_option("--subsample", opts.subsample, "Uniform row subsample size");
    cmd->add_option("--seed", opts.seed, "Seed for subsampling and generation");
    cmd->add_option("--out", opts.out, "Output path (stdout table if omitted)");
    cmd->add_option("--format", opts.format, "File output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--findings", opts.findings_path,
                    "Where observed bound violations are persisted");
}

KernelRate resolve_rate(const CommonOptions& opts, Index feature_dim) {
    if (opts.k_text.empty()) {
        throw Error("--k is required unless the input kind is similarity_csv");
    }
    if (io::detail::lowercase(io::detail::trimmed(opts.k_text)) == "rmsd") {
        if (feature_dim < 1) {
            throw Error("--k rmsd needs feature input to know the dimension");
        }
        return rmsd_rate(feature_dim);
    }
    const auto value = io::detail::parse_number(opts.k_text);
    if (!value) throw Error("cannot parse --k value '" + opts.k_text + "'");
    return KernelRate(*value);
}

Matrix load_feature_matrix(const CommonOptions& opts, const std::string& path) {
    io::FeatureCsvOptions fopts;
    for (const std::string& name : opts.extra_id_columns) {
        fopts.id_column_names.push_back(name);
    }
    if (opts.subsample) fopts.subsample = static_cast<Index>(*opts.subsample);
    fopts.seed = opts.seed;
    auto report = io::load_features_file(path, fopts);
    for (const auto& [name, reason] : report.dropped_columns) {
        std::cerr << "dropped column '" << name << "': " << reason << "\n";
    }
    if (opts.subsample) {
        std::cerr << "subsampled " << report.features.rows() << " of "
                  << report.rows_before_subsample << " rows (seed " << opts.seed
                  << ")\n";
    }
    return report.features;
}

DistanceMatrix load_distances(const CommonOptions& opts, const std::string& path) {
    if (opts.kind == "features_csv") {
        return pairwise_distances(load_feature_matrix(opts, path));
    }
    if (opts.kind == "distance_csv") {
        return DistanceMatrix::adopt(io::read_matrix_csv_file(path));
    }
    throw Error("this command needs features_csv or distance_csv input");
}

SimilarityMatrix build_similarity(const CommonOptions& opts,
                                  const std::string& path) {
    if (opts.kind == "similarity_csv") {
        return SimilarityMatrix::adopt(io::read_matrix_csv_file(path));
    }
    if (opts.kind == "features_csv") {
        Matrix features = load_feature_matrix(opts, path);
        const Index dim = features.cols();
        return kernel_similarity(pairwise_distances(features),
                                 resolve_rate(opts, dim));
    }
    DistanceMatrix d = DistanceMatrix::adopt(io::read_matrix_csv_file(path));
    return kernel_similarity(d, resolve_rate(opts, 0));
}

std::vector<std::int64_t> load_counts(const std::string& path) {
    Matrix m = io::read_matrix_csv_file(path);
    if (m.rows() != 1 && m.cols() != 1) {
        throw Error("counts CSV must be a single row or column");
    }
    std::vector<std::int64_t> counts;
    for (Index i = 0; i < m.size(); ++i) {
        const double v = m.data()[i];
        if (v != std::floor(v) || v < 0) {
            throw Error("counts must be nonnegative integers, got " +
                        io::format_double(v));
        }
        counts.push_back(static_cast<std::int64_t>(v));
    }
    return counts;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    return out;
}

// One (q, value[, value]) table: aligned 6-significant-digit text on stdout,
// 17-digit CSV or JSON when written to a file.
void emit_order_table(const CommonOptions& opts,
                      const std::vector<std::string>& columns,
                      const std::vector<Order>& orders,
                      const std::vector<std::vector<double>>& rows) {
    if (opts.out.empty()) {
        std::printf("%-10s", "q");
        for (const auto& column : columns) std::printf(" %14s", column.c_str());
        std::printf("\n");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::printf("%-10s", io::format_order(orders[i]).c_str());
            for (double v : rows[i]) std::printf(" %14.6g", v);
            std::printf("\n");
        }
        return;
    }
    auto out = open_output(opts.out);
    if (opts.format == "json") {
        nlohmann::json j = nlohmann::json::array();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            nlohmann::json row;
            row["q"] = io::order_json(orders[i]);
            for (std::size_t c = 0; c < columns.size(); ++c) {
                row[columns[c]] = rows[i][c];
            }
            j.push_back(row);
        }
        out << j.dump(2) << "\n";
    } else {
        out << "q";
        for (const auto& column : columns) out << ',' << column;
        out << '\n';
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out << io::format_order(orders[i]);
            for (double v : rows[i]) out << ',' << io::format_double(v);
            out << '\n';
        }
    }
}

int run_validate(const CommonOptions& opts) {
    const Matrix raw = io::read_matrix_csv_file(opts.inputs[0]);
    auto report = validate_similarity(raw);
    nlohmann::json j;
    j["valid"] = report.valid;
    if (report.valid) {
        auto z = SimilarityMatrix::adopt(raw);
        auto psd = is_psd(z);
        j["psd"] = psd.is_psd;
        j["min_eigenvalue"] = psd.min_eigenvalue;
        std::cout << "valid similarity matrix of order " << z.order() << "\n"
                  << (psd.is_psd ? "PSD" : "not PSD")
                  << " (min eigenvalue " << psd.min_eigenvalue << ")\n";
    } else {
        std::cout << report.summary() << "\n";
        auto violations = nlohmann::json::array();
        for (const auto& v : report.worst) violations.push_back(v.describe());
        j["worst_violations"] = violations;
    }
    if (!opts.out.empty()) {
        auto out = open_output(opts.out);
        out << j.dump(2) << "\n";
    }
    return report.valid ? 0 : kExitValidation;
}

int run_entropy(const CommonOptions& opts, bool with_hill) {
    auto orders = io::parse_order_list(opts.q_text);
    auto z = build_similarity(opts, opts.inputs[0]);
    Abundance p = opts.counts_path.empty()
                      ? Abundance::uniform(z.order())
                      : Abundance::from_counts(load_counts(opts.counts_path));
    auto profile = lcr_profile(p, z, orders);

    std::vector<std::string> columns{"lcr"};
    if (with_hill) columns.push_back("hill");
    std::vector<std::vector<double>> rows;
    for (const auto& [q, value] : profile) {
        std::vector<double> row{value.value};
        if (with_hill) row.push_back(hill_number(p, q).value);
        rows.push_back(std::move(row));
    }
    emit_order_table(opts, columns, orders, rows);
    return 0;
}

int run_vendi(const CommonOptions& opts, const std::string& spectrum_path) {
    auto orders = io::parse_order_list(opts.q_text);
    auto z = build_similarity(opts, opts.inputs[0]);
    if (!opts.counts_path.empty()) {
        z = expand_to_zn(z, load_counts(opts.counts_path));
    }
    auto spectrum = eigen_spectrum(z);
    if (spectrum.materially_non_psd) {
        std::cerr << "warning: similarity matrix is materially non-PSD (min "
                     "eigenvalue of Z/n is "
                  << spectrum.min_raw
                  << "); the score uses the truncated positive spectrum\n";
    }
    if (spectrum.truncated > 0) {
        std::cerr << "note: " << spectrum.truncated
                  << " nonpositive eigenvalues truncated, trace deficit "
                  << spectrum.trace_deficit << "\n";
    }
    auto curve = spectrum_entropy_curve(spectrum, orders);
    std::vector<std::vector<double>> rows;
    for (const auto& [q, value] : curve) rows.push_back({value.value});
    emit_order_table(opts, {"vs"}, orders, rows);
    if (!spectrum_path.empty()) {
        auto out = open_output(spectrum_path);
        write_spectrum_csv(spectrum, out);
    }
    return 0;
}

int run_spectrum(const CommonOptions& opts) {
    auto z = build_similarity(opts, opts.inputs[0]);
    auto spectrum = eigen_spectrum(z);
    if (opts.out.empty()) {
        write_spectrum_csv(spectrum, std::cout);
    } else {
        auto out = open_output(opts.out);
        write_spectrum_csv(spectrum, out);
    }
    return 0;
}

int run_sweep(const CommonOptions& opts, int k_count, double k_min, double k_max,
              const std::string& stats_path) {
    auto orders = io::parse_order_list(opts.q_text);
    std::vector<DistanceMatrix> datasets;
    for (const std::string& path : opts.inputs) {
        datasets.push_back(load_distances(opts, path));
    }
    std::vector<double> grid;
    if ((k_min > 0.0) != (k_max > 0.0)) {
        throw Error("--k-min and --k-max must be given together");
    }
    if (k_min > 0.0 && k_max > 0.0) {
        if (!(k_min < k_max)) throw Error("--k-min must be below --k-max");
        for (int i = 0; i < k_count; ++i) {
            grid.push_back(std::exp(std::log(k_min) +
                                    (std::log(k_max) - std::log(k_min)) * i /
                                        (k_count - 1)));
        }
    } else {
        grid = default_k_grid(datasets, k_count);
    }
    auto result = sweep_half_distance(datasets, grid, orders);

    int exit_code = 0;
    for (const auto& cell : result.cells) {
        if (cell.status != "ok" || cell.q < 0.0) continue;
        if (cell.vs < cell.lcr - kGapTolerance) {
            nlohmann::json finding;
            finding["kind"] = "sweep VS >= LCR violation";
            finding["dataset"] = cell.dataset;
            finding["k"] = cell.k;
            finding["q"] = io::order_json(cell.q);
            finding["lcr"] = cell.lcr;
            finding["vs"] = cell.vs;
            io::append_finding(opts.findings_path, finding);
            const bool proven = cell.q == 2.0 || cell.q == 3.0 ||
                                (std::isinf(cell.q) && cell.q > 0);
            exit_code = proven ? kExitProvenBoundViolated
                               : std::max(exit_code, kExitCandidate);
            std::cerr << "bound violation persisted to " << opts.findings_path
                      << "\n";
        }
    }

    if (opts.out.empty()) {
        io::write_sweep_cells_csv(std::cout, result);
        std::cout << "\n";
        io::write_sweep_stats_csv(std::cout, result);
    } else {
        auto cells_out = open_output(opts.out);
        io::write_sweep_cells_csv(cells_out, result);
        std::string stats_file = stats_path;
        if (stats_file.empty()) {
            stats_file = opts.out;
            const auto dot = stats_file.find_last_of('.');
            stats_file.insert(dot == std::string::npos ? stats_file.size() : dot,
                              "_stats");
        }
        auto stats_out = open_output(stats_file);
        io::write_sweep_stats_csv(stats_out, result);
        std::cerr << "wrote " << opts.out << " and " << stats_file << "\n";
    }
    return exit_code;
}

int run_search(const CommonOptions& opts, const std::string& grid_name,
               const std::string& orders_text, const std::string& sizes_text,
               const std::string& scales_text, int replicates, int threads,
               const std::string& summary_path) {
    SearchGrid grid;
    if (grid_name == "desk") {
        grid = SearchGrid::desk();
    } else if (grid_name == "full") {
        grid = SearchGrid::reference();
    } else {
        throw Error("unknown grid '" + grid_name + "' (desk or full)");
    }
    if (!orders_text.empty()) grid.orders = io::parse_order_list(orders_text);
    if (!sizes_text.empty()) {
        grid.sizes.clear();
        for (Order v : io::parse_order_list(sizes_text)) {
            grid.sizes.push_back(static_cast<int>(v));
        }
    }
    if (!scales_text.empty()) {
        grid.scales.clear();
        for (Order v : io::parse_order_list(scales_text)) grid.scales.push_back(v);
    }
    if (replicates > 0) grid.replicates = replicates;

    SearchSettings settings;
    settings.seed = opts.seed == 0 ? 1 : opts.seed;
    settings.threads = threads;

    std::optional<std::ofstream> records_out;
    if (!opts.out.empty()) records_out = open_output(opts.out);
    std::size_t done = 0;
    const std::size_t total = grid.minimization_count();
    auto records = counterexample_search(
        grid, settings, [&](const SearchRecord& record) {
            if (records_out) {
                *records_out << io::search_record_json(record).dump() << "\n";
            }
            if (++done % 50 == 0) {
                std::cerr << "minimized " << done << "/" << total << "\n";
            }
        });

    int candidates = 0;
    int failures = 0;
    bool proven_violated = false;
    for (const auto& record : records) {
        if (record.status == SearchStatus::failed) ++failures;
        if (record.status == SearchStatus::counterexample_candidate) {
            ++candidates;
            io::append_finding(opts.findings_path,
                               io::search_record_json(record));
            const bool proven = record.q == 2.0 || record.q == 3.0 ||
                                (std::isinf(record.q) && record.q > 0);
            proven_violated = proven_violated || proven;
        }
    }
    if (summary_path.empty()) {
        io::write_search_summary_csv(std::cout, records);
    } else {
        auto out = open_output(summary_path);
        io::write_search_summary_csv(out, records);
    }
    std::cout << records.size() << " minimizations, " << candidates
              << " counterexample candidates, " << failures << " failures\n";
    if (candidates > 0) {
        std::cerr << "candidates persisted to " << opts.findings_path << "\n";
        return proven_violated ? kExitProvenBoundViolated : kExitCandidate;
    }
    return 0;
}

int run_bench(const CommonOptions& opts, const std::string& sizes_text,
              int replicates, int rank) {
    if (replicates < 5) throw Error("bench requires at least 5 replicates");
    std::vector<int> sizes;
    for (Order v : io::parse_order_list(sizes_text)) {
        sizes.push_back(static_cast<int>(v));
    }
    using clock = std::chrono::steady_clock;
    Rng rng(opts.seed == 0 ? 1 : opts.seed);

    std::vector<std::string> lines;
    int exit_code = 0;
    for (int n : sizes) {
        const int r = std::min(std::max(2, rank), n);
        Matrix x(r, n);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        const SimilarityMatrix z = gram_from_parameters(x);
        const Abundance uniform = Abundance::uniform(n);

        std::vector<double> lcr_times, vs_times;
        double lcr_value = 0.0, vs_value = 0.0;
        for (int rep = 0; rep < replicates; ++rep) {
            auto t0 = clock::now();
            lcr_value = lcr_diversity(uniform, z, 1.0).value;
            auto t1 = clock::now();
            vs_value = vendi_score(z, 1.0).value;
            auto t2 = clock::now();
            lcr_times.push_back(std::chrono::duration<double>(t1 - t0).count());
            vs_times.push_back(std::chrono::duration<double>(t2 - t1).count());
        }
        std::sort(lcr_times.begin(), lcr_times.end());
        std::sort(vs_times.begin(), vs_times.end());
        const double lcr_median = lcr_times[lcr_times.size() / 2];
        const double vs_median = vs_times[vs_times.size() / 2];
        if (!(std::isfinite(lcr_value) && std::isfinite(vs_value))) {
            throw Error("bench produced a non-finite diversity at n = " +
                        std::to_string(n));
        }
        if (vs_value < lcr_value - kGapTolerance) {
            nlohmann::json finding;
            finding["kind"] = "bench VS >= LCR violation";
            finding["n"] = n;
            finding["lcr"] = lcr_value;
            finding["vs"] = vs_value;
            io::append_finding(opts.findings_path, finding);
            exit_code = kExitCandidate;
        }
        char line[160];
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%d", n, lcr_median,
                      vs_median, replicates);
        lines.emplace_back(line);
        std::fprintf(stderr, "n=%d lcr %.3gs vs %.3gs (medians of %d)\n", n,
                     lcr_median, vs_median, replicates);
    }
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!opts.out.empty()) {
        file = open_output(opts.out);
        out = &file;
    }
    *out << "n,lcr_seconds,vs_seconds,replicates\n";
    for (const auto& line : lines) *out << line << "\n";
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"similarity-sensitive diversity and eigenvalue-entropy toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML-like config file mirroring all flags");

    CommonOptions validate_opts, entropy_opts, vendi_opts, spectrum_opts,
        sweep_opts, search_opts, bench_opts;

    auto* cmd_validate = app.add_subcommand(
        "validate", "Check a similarity matrix CSV against the invariants");
    add_common_options(cmd_validate, validate_opts, false);

    bool with_hill = false;
    auto* cmd_entropy = app.add_subcommand(
        "entropy", "Similarity-sensitive diversity per order");
    add_common_options(cmd_entropy, entropy_opts, false);
    cmd_entropy->add_flag("--hill", with_hill,
                          "Also report similarity-insensitive hill numbers");
    cmd_entropy->add_option("--counts", entropy_opts.counts_path,
                            "CSV of per-element multiplicities");

    std::string spectrum_path;
    auto* cmd_vendi =
        app.add_subcommand("vendi", "Eigenvalue entropy (Vendi score) per order");
    add_common_options(cmd_vendi, vendi_opts, false);
    cmd_vendi->add_option("--spectrum", spectrum_path,
                          "Also export the eigenvalue spectrum CSV here");
    cmd_vendi->add_option("--counts", vendi_opts.counts_path,
                          "CSV of per-element multiplicities");

    auto* cmd_spectrum =
        app.add_subcommand("spectrum", "Export the eigenvalue spectrum as CSV");
    add_common_options(cmd_spectrum, spectrum_opts, false);

    int k_count = 33;
    double k_min = 0.0, k_max = 0.0;
    std::string stats_path;
    auto* cmd_sweep = app.add_subcommand(
        "sweep", "Half-distance sweep and LCR/VS correlation across datasets");
    add_common_options(cmd_sweep, sweep_opts, true);
    cmd_sweep->add_option("--k-count", k_count, "Grid size (default 33)");
    cmd_sweep->add_option("--k-min", k_min, "Grid start (default 0.1/d_max)");
    cmd_sweep->add_option("--k-max", k_max, "Grid end (default 10/d_min+)");
    cmd_sweep->add_option("--stats-out", stats_path, "Stats CSV path");

    std::string grid_name = "desk";
    std::string orders_text, sizes_text, scales_text, summary_path;
    int replicates = 0;
    int threads = 1;
    auto* cmd_search = app.add_subcommand(
        "search", "Minimization search for VS >= LCR counterexamples");
    cmd_search->add_option("--grid", grid_name, "desk (210 points) or full (4420)");
    cmd_search->add_option("--orders", orders_text, "Override the order list");
    cmd_search->add_option("--sizes", sizes_text, "Override the size list");
    cmd_search->add_option("--scales", scales_text, "Override the scale list");
    cmd_search->add_option("--replicates", replicates, "Override replicates");
    cmd_search->add_option("--threads", threads, "Worker threads");
    cmd_search->add_option("--seed", search_opts.seed, "Master seed");
    cmd_search->add_option("--out", search_opts.out, "Record JSONL path");
    cmd_search->add_option("--summary-out", summary_path, "Summary CSV path");
    cmd_search->add_option("--findings", search_opts.findings_path,
                           "Counterexample persistence path");

    std::string bench_sizes = "1000,2000";
    int bench_replicates = 5;
    int bench_rank = 16;
    auto* cmd_bench = app.add_subcommand(
        "bench", "Wall-time comparison of LCR and VS on random gram matrices");
    cmd_bench->add_option("--sizes", bench_sizes, "Matrix orders to time");
    cmd_bench->add_option("--replicates", bench_replicates, "Replicates (>= 5)");
    cmd_bench->add_option("--rank", bench_rank, "Gram rank of the test matrices");
    cmd_bench->add_option("--seed", bench_opts.seed, "Generation seed");
    cmd_bench->add_option("--out", bench_opts.out, "Output CSV path");
    cmd_bench->add_option("--findings", bench_opts.findings_path,
                          "Bound-violation persistence path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cmd_validate)) return run_validate(validate_opts);
        if (app.got_subcommand(cmd_entropy)) {
            return run_entropy(entropy_opts, with_hill);
        }
        if (app.got_subcommand(cmd_vendi)) {
            return run_vendi(vendi_opts, spectrum_path);
        }
        if (app.got_subcommand(cmd_spectrum)) return run_spectrum(spectrum_opts);
        if (app.got_subcommand(cmd_sweep)) {
            return run_sweep(sweep_opts, k_count, k_min, k_max, stats_path);
        }
        if (app.got_subcommand(cmd_search)) {
            return run_search(search_opts, grid_name, orders_text, sizes_text,
                              scales_text, replicates, threads, summary_path);
        }
        if (app.got_subcommand(cmd_bench)) {
            return run_bench(bench_opts, bench_sizes, bench_replicates, bench_rank);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
