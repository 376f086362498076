#include "cubeforest/prequential.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace cubeforest {

eval::LabeledScores PrequentialResult::labeled() const {
    eval::LabeledScores out;
    out.scores = scores;
    out.labels.reserve(labels.size());
    for (const auto& l : labels) {
        if (!l) {
            throw std::invalid_argument("scored point without a ground-truth label");
        }
        out.labels.push_back(*l);
    }
    return out;
}

PrequentialResult run_prequential(const stream::DetectorConfig& config, stream::PointSource& source) {
    const auto start = std::chrono::steady_clock::now();
    PrequentialResult result;
    auto sink = [&result](const stream::ChunkReport& report, std::span<const std::optional<bool>> labels) {
        for (std::size_t i = 0; i < report.scores.size(); ++i) {
            result.index.push_back(report.first_point + i);
            result.scores.push_back(report.scores[i]);
            result.predictions.push_back(report.labels[i]);
            result.labels.push_back(labels[i]);
        }
        ++result.chunks;
        result.max_footprint = std::max(result.max_footprint, report.state_footprint);
    };
    stream::run_stream(config, source, sink);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_scores(std::ostream& out, const PrequentialResult& result) {
    out << kScoresHeader << '\n' << "index,score,label\n" << std::setprecision(17);
    for (std::size_t i = 0; i < result.scores.size(); ++i) {
        out << result.index[i] << ',' << result.scores[i] << ',' << (result.predictions[i] ? 1 : 0) << '\n';
    }
}

SyntheticResult run_synthetic(const synth::SineStreamSpec& spec, std::size_t shingle_width,
                              const stream::DetectorConfig& config) {
    const auto series = synth::generate(spec);
    SyntheticResult out;
    out.shingled = synth::shingle_labels(series, shingle_width);
    const Matrix points = Matrix::from_rows(stream::shingle(series.values, shingle_width));
    stream::MatrixSource source(points, out.shingled.labels);
    out.run = run_prequential(config, source);

    eval::LabeledScores scored = out.run.labeled();
    scored.types.reserve(out.run.index.size());
    for (std::size_t i : out.run.index) {
        scored.types.push_back(out.shingled.types[i]);
    }
    out.auc = eval::auc_roc(scored);
    out.accuracy = eval::per_type_accuracy(scored, out.run.predictions);
    for (const auto& [type, acc] : out.accuracy) {
        if (type == eval::AnomalyType::None) {
            continue;
        }
        eval::LabeledScores subset;
        for (std::size_t i = 0; i < scored.scores.size(); ++i) {
            if (scored.types[i] == type || scored.types[i] == eval::AnomalyType::None) {
                subset.scores.push_back(scored.scores[i]);
                subset.labels.push_back(scored.labels[i]);
            }
        }
        out.type_auc[type] = eval::auc_roc(subset);
    }
    return out;
}

}  // namespace cubeforest
