#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "cubeforest/eval.hpp"
#include "cubeforest/stream.hpp"
#include "cubeforest/synth.hpp"

namespace cubeforest {

// Test-then-train trace of one detector run. Bootstrap points are not scored.
struct PrequentialResult {
    std::vector<std::size_t> index;  // stream position of each scored point
    std::vector<double> scores;
    std::vector<bool> predictions;
    std::vector<std::optional<bool>> labels;
    std::size_t chunks = 0;
    std::size_t max_footprint = 0;
    double seconds = 0.0;

    // Scores and labels of the scored points; throws if any label is missing.
    eval::LabeledScores labeled() const;
};

PrequentialResult run_prequential(const stream::DetectorConfig& config, stream::PointSource& source);

inline constexpr std::string_view kScoresHeader = "# cubeforest-scores v1";

// Header line, then "index,score,label" per scored point.
void write_scores(std::ostream& out, const PrequentialResult& result);

struct SyntheticResult {
    PrequentialResult run;
    synth::SyntheticStream shingled;  // labels/types aligned with shingle positions
    double auc = 0.0;
    std::map<eval::AnomalyType, double> accuracy;
    // AUC of each anomaly type's shingles against the normal ones
    std::map<eval::AnomalyType, double> type_auc;
};

// Generates the series, shingles it and replays the shingles through the detector.
SyntheticResult run_synthetic(const synth::SineStreamSpec& spec, std::size_t shingle_width,
                              const stream::DetectorConfig& config);

}  // namespace cubeforest
