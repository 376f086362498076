#include "cubeforest/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "cubeforest/error.hpp"
#include "cubeforest/eval.hpp"
#include "cubeforest/ingest.hpp"
#include "cubeforest/prequential.hpp"
#include "cubeforest/stream.hpp"
#include "cubeforest/synth.hpp"

namespace cubeforest::cli {
namespace {

std::istream* g_stdin = &std::cin;

// Detector flags shared by bench and score.
struct DetectorFlags {
    std::size_t window = 256;
    std::size_t ntrees = 50;
    std::size_t ktrees = 10;
    std::size_t sample_size = 256;
    std::optional<double> contamination;
    std::optional<double> cutoff;
    std::string reducer = "centroid";
    std::uint64_t seed = 0;
    bool scale = false;

    void attach(CLI::App& app) {
        app.add_option("--window", window, "sliding window size")->capture_default_str();
        app.add_option("--ntrees", ntrees, "trees in the forest")->capture_default_str();
        app.add_option("--ktrees", ktrees, "trees replaced per chunk")->capture_default_str();
        app.add_option("--sample-size", sample_size, "cube sample size used to build trees")->capture_default_str();
        auto* c = app.add_option("--contamination", contamination, "label the top fraction of each chunk");
        app.add_option("--cutoff", cutoff, "label scores at or above this value instead")->excludes(c);
        app.add_option("--reducer", reducer, "inclusion-probability score: centroid | pc1")->capture_default_str();
        app.add_option("--seed", seed, "master seed")->capture_default_str();
        app.add_flag("--scale", scale, "min-max scale features using the bootstrap window");
    }

    stream::DetectorConfig config(double default_contamination) const {
        stream::DetectorConfig c;
        c.window_size = window;
        c.ntrees = ntrees;
        c.ktrees = ktrees;
        c.sample_size = sample_size;
        c.reducer = sampling::parse_reducer(reducer);
        c.seed = seed;
        c.threshold = cutoff ? stream::ThresholdPolicy::fixed(*cutoff)
                             : stream::ThresholdPolicy::contamination(contamination.value_or(default_contamination));
        c.validate();
        return c;
    }
};

void echo_config(eval::MetricsRecord& rec, const stream::DetectorConfig& c, bool scaled) {
    rec.add("window", c.window_size)
        .add("ntrees", c.ntrees)
        .add("ktrees", c.ktrees)
        .add("sample_size", c.sample_size)
        .add("height_limit", static_cast<long long>(c.height_limit()))
        .add("reducer", std::string(sampling::to_string(c.reducer)))
        .add("threshold_policy",
             std::string(c.threshold.kind == stream::ThresholdPolicy::Kind::Contamination ? "contamination" : "cutoff"))
        .add("threshold_value", c.threshold.value)
        .add("scaled", std::string(scaled ? "yes" : "no"));
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path);
    if (!f) {
        throw DataError("cannot write " + path);
    }
    return f;
}

std::filesystem::path data_dir(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv(ingest::kDataDirEnv)) {
        return env;
    }
    return "data";
}

struct BenchFlags {
    std::string dataset;
    std::string data_dir;
    std::string synth_spec;
    std::size_t shingle = 16;
    std::size_t reps = 1;
    std::string output;
    std::optional<std::size_t> limit;
};

int cmd_bench(const BenchFlags& bench, const DetectorFlags& det, std::ostream& out, std::ostream& err) {
    if (bench.reps < 1) {
        throw std::invalid_argument("--reps must be at least 1");
    }
    std::vector<eval::MetricsRecord> records;
    std::optional<PrequentialResult> first_run;

    if (!bench.synth_spec.empty()) {
        const auto base = synth::load_spec(bench.synth_spec);
        std::vector<double> aucs;
        for (std::size_t r = 0; r < bench.reps; ++r) {
            // each repetition also redraws the noise
            auto spec = base;
            spec.seed = base.seed + r;
            // like the real benchmarks, default to the stream's own anomaly fraction
            const auto labels = synth::shingle_labels(synth::generate(spec), bench.shingle).labels;
            const double q = static_cast<double>(std::count(labels.begin(), labels.end(), true)) /
                             static_cast<double>(labels.size());
            auto config = det.config(q > 0.0 && q < 1.0 ? q : 0.1);
            config.seed = det.seed + r;
            const auto result = run_synthetic(spec, bench.shingle, config);
            eval::MetricsRecord rec;
            rec.add("dataset", "synthetic:" + std::filesystem::path(bench.synth_spec).filename().string())
                .add("seed", static_cast<long long>(config.seed))
                .add("noise_seed", static_cast<long long>(spec.seed))
                .add("shingle", bench.shingle)
                .add("scored_points", result.run.scores.size());
            echo_config(rec, config, false);
            rec.add("auc", result.auc);
            for (const auto& [type, acc] : result.accuracy) {
                rec.add("accuracy_" + std::string(eval::to_string(type)), acc);
            }
            for (const auto& [type, auc] : result.type_auc) {
                rec.add("auc_" + std::string(eval::to_string(type)), auc);
            }
            records.push_back(std::move(rec));
            aucs.push_back(result.auc);
            if (!first_run) {
                first_run = result.run;
            }
            err << "synthetic seed " << config.seed << ": auc " << result.auc << " (" << result.run.seconds << " s)\n";
        }
        if (bench.reps > 1) {
            const auto [m, s] = mean_std(aucs);
            eval::MetricsRecord summary;
            summary.add("dataset", "synthetic:summary").add("reps", bench.reps).add("auc_mean", m).add("auc_std", s);
            records.push_back(std::move(summary));
        }
    } else {
        if (bench.dataset.empty()) {
            throw std::invalid_argument("bench needs --dataset or --synth-spec");
        }
        const auto* known = ingest::find_benchmark(bench.dataset);
        auto warn = [&err](const std::string& msg) { err << "warning: " << msg << '\n'; };
        ingest::LabeledDataset data = known ? ingest::load_benchmark(*known, data_dir(bench.data_dir), warn)
                                            : ingest::load_csv(bench.dataset, ingest::CsvOptions{}, nullptr, warn);
        if (data.labels.empty()) {
            throw DataError("dataset has no label column");
        }
        if (bench.limit && *bench.limit < data.features.rows()) {
            std::vector<std::size_t> prefix(*bench.limit);
            std::iota(prefix.begin(), prefix.end(), std::size_t{0});
            data.features = data.features.select_rows(prefix);
            data.labels.resize(*bench.limit);
        }
        if (data.features.rows() < det.window) {
            throw DataError("dataset has " + std::to_string(data.features.rows()) + " rows, fewer than the window (" +
                            std::to_string(det.window) + "); try a smaller --window");
        }
        const double default_q = known ? known->anomaly_fraction : 0.1;
        std::vector<double> aucs;
        std::vector<double> secs;
        for (std::size_t r = 0; r < bench.reps; ++r) {
            auto config = det.config(default_q);
            config.seed = det.seed + r;
            stream::MatrixSource rows(data.features, data.labels);
            std::optional<ingest::ScalingSource> scaled;
            if (det.scale) {
                scaled.emplace(rows, config.window_size);
            }
            stream::PointSource& source = det.scale ? static_cast<stream::PointSource&>(*scaled) : rows;
            auto result = run_prequential(config, source);
            const double auc = eval::auc_roc(result.labeled());
            eval::MetricsRecord rec;
            rec.add("dataset", known ? known->name : bench.dataset)
                .add("rows", data.features.rows())
                .add("attributes", data.features.cols())
                .add("seed", static_cast<long long>(config.seed))
                .add("scored_points", result.scores.size());
            echo_config(rec, config, det.scale);
            rec.add("auc", auc);
            records.push_back(std::move(rec));
            aucs.push_back(auc);
            secs.push_back(result.seconds);
            err << (known ? known->name : bench.dataset) << " seed " << config.seed << ": auc " << auc << " ("
                << result.seconds << " s)\n";
            if (!first_run) {
                first_run = std::move(result);
            }
        }
        const auto [m, s] = mean_std(aucs);
        eval::MetricsRecord summary;
        summary.add("dataset", (known ? known->name : bench.dataset) + ":summary")
            .add("reps", bench.reps)
            .add("auc_mean", m)
            .add("auc_std", s);
        records.push_back(std::move(summary));
        err << "auc " << std::fixed << std::setprecision(4) << m << " +/- " << s << " over " << bench.reps
            << " seeds\n" << std::defaultfloat;
    }

    if (bench.output.empty()) {
        eval::write_metrics(out, records);
    } else {
        auto metrics = open_output(bench.output + ".metrics");
        eval::write_metrics(metrics, records);
        auto scores = open_output(bench.output + ".scores");
        write_scores(scores, *first_run);
    }
    return kSuccess;
}

struct ScoreFlags {
    std::string input = "-";
    std::string output;
    std::string save_forest;
    bool labeled = false;
    bool header = false;
    bool skip_malformed = false;
    std::size_t shingle = 0;
};

int cmd_score(const ScoreFlags& flags, const DetectorFlags& det, std::ostream& out, std::ostream& err) {
    const auto config = det.config(0.1);
    std::ifstream file;
    std::istream* in = g_stdin;
    if (flags.input != "-") {
        file.open(flags.input);
        if (!file) {
            throw DataError("cannot open " + flags.input);
        }
        in = &file;
    }
    std::ofstream out_file;
    std::ostream* sink = &out;
    if (!flags.output.empty()) {
        out_file = open_output(flags.output);
        sink = &out_file;
    }

    ingest::StreamOptions opts;
    opts.header = flags.header;
    opts.trailing_label = flags.labeled;
    opts.malformed = flags.skip_malformed ? ingest::MalformedPolicy::Skip : ingest::MalformedPolicy::Abort;
    ingest::StreamSource lines(*in, opts, [&err](const std::string& msg) { err << "warning: " << msg << '\n'; });

    std::optional<stream::ShingleSource> shingled;
    stream::PointSource* source = &lines;
    if (flags.shingle > 0) {
        shingled.emplace(lines, flags.shingle);
        source = &*shingled;
    }
    std::optional<ingest::ScalingSource> scaled;
    if (det.scale) {
        scaled.emplace(*source, config.window_size);
        source = &*scaled;
    }

    *sink << kScoresHeader << '\n' << "index,score,label\n" << std::setprecision(17);
    std::size_t scored = 0;
    const auto detector = stream::run_stream(config, *source, [&](const stream::ChunkReport& report, auto) {
        for (std::size_t i = 0; i < report.scores.size(); ++i) {
            *sink << report.first_point + i << ',' << report.scores[i] << ',' << (report.labels[i] ? 1 : 0) << '\n';
        }
        sink->flush();
        scored += report.scores.size();
    });
    if (!flags.save_forest.empty()) {
        auto f = open_output(flags.save_forest);
        iforest::save_forest(detector.forest(), f);
    }
    err << "scored " << scored << " points in " << detector.chunks_processed() << " chunks\n";
    return kSuccess;
}

struct SynthFlags {
    std::string spec;
    std::string output;
    std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthFlags& flags, std::ostream& err) {
    synth::SineStreamSpec spec = flags.spec.empty() ? synth::SineStreamSpec{} : synth::load_spec(flags.spec);
    if (flags.seed) {
        spec.seed = *flags.seed;
    }
    const auto s = synth::generate(spec);
    auto values = open_output(flags.output + ".values.txt");
    synth::write_values(values, s);
    auto labels = open_output(flags.output + ".labels.txt");
    synth::write_labels(labels, s);
    err << "wrote " << s.values.size() << " samples ("
        << std::count(s.labels.begin(), s.labels.end(), true) << " anomalous) to " << flags.output
        << ".{values,labels}.txt\n";
    return kSuccess;
}

}  // namespace

void set_standard_input(std::istream& in) { g_stdin = &in; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming anomaly detection with cube-sampled isolation forests", "cubeforest"};
    app.require_subcommand(1);

    DetectorFlags bench_det, score_det;
    BenchFlags bench;
    auto* bench_cmd = app.add_subcommand("bench", "replay a labeled dataset and report prequential AUC");
    bench_cmd->add_option("--dataset", bench.dataset, "registry name (breastw, satellite, ...) or CSV path");
    bench_cmd->add_option("--data-dir", bench.data_dir,
                          std::string("benchmark directory (default $") + ingest::kDataDirEnv + " or ./data)");
    bench_cmd->add_option("--synth-spec", bench.synth_spec, "evaluate on a synthetic sine stream spec instead");
    bench_cmd->add_option("--shingle", bench.shingle, "shingle width for synthetic streams")->capture_default_str();
    bench_cmd->add_option("--reps", bench.reps, "repetitions with seeds seed, seed+1, ...")->capture_default_str();
    bench_cmd->add_option("--limit", bench.limit, "use only the first N rows");
    bench_cmd->add_option("--output", bench.output, "write PREFIX.metrics and PREFIX.scores");
    bench_det.attach(*bench_cmd);

    ScoreFlags score;
    auto* score_cmd = app.add_subcommand("score", "score a live stream of comma-separated records");
    score_cmd->add_option("--input", score.input, "input file, - for stdin")->capture_default_str();
    score_cmd->add_option("--output", score.output, "score file (default stdout)");
    score_cmd->add_flag("--labeled", score.labeled, "records end with a 0/1 label field");
    score_cmd->add_flag("--header", score.header, "skip the first input line");
    score_cmd->add_flag("--skip-malformed", score.skip_malformed, "warn and skip bad lines instead of aborting");
    score_cmd->add_option("--shingle", score.shingle, "shingle a univariate stream to this width");
    score_cmd->add_option("--save-forest", score.save_forest, "write the final forest to this file");
    score_det.attach(*score_cmd);

    SynthFlags synth_flags;
    auto* synth_cmd = app.add_subcommand("synth", "generate a sine stream with injected anomalies");
    synth_cmd->add_option("--spec", synth_flags.spec, "JSON stream spec");
    synth_cmd->add_option("--output", synth_flags.output, "output prefix")->required();
    synth_cmd->add_option("--seed", synth_flags.seed, "override the spec's noise seed");

    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*bench_cmd) {
            return cmd_bench(bench, bench_det, out, err);
        }
        if (*score_cmd) {
            return cmd_score(score, score_det, out, err);
        }
        return cmd_synth(synth_flags, err);
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
}

}  // namespace cubeforest::cli
