#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cubeforest/eval.hpp"

namespace cubeforest::synth {

struct Injection {
    eval::AnomalyType type = eval::AnomalyType::Point;
    std::size_t position = 0;
    std::size_t span = 1;
    // point: displacement in units of amplitude (sign gives direction)
    // contextual: held level in units of amplitude, within [-1, 1]
    // collective: frequency multiplier of the replacement wave (0 gives a flat segment)
    double magnitude = 3.0;
};

struct SineStreamSpec {
    std::size_t length = 2048;
    double amplitude = 1.0;
    double period = 64.0;
    double noise_sigma = 0.05;
    std::vector<Injection> injections;
    std::uint64_t seed = 0;

    // Throws std::invalid_argument on out-of-range or overlapping injections.
    void validate() const;
};

struct SyntheticStream {
    std::vector<double> values;
    std::vector<bool> labels;
    std::vector<eval::AnomalyType> types;
};

SyntheticStream generate(const SineStreamSpec& spec);

// Labels for the shingles of width n over a labeled series: a shingle is
// anomalous when it covers any injected sample and takes that sample's type.
SyntheticStream shingle_labels(const SyntheticStream& series, std::size_t width);

// JSON spec file: {"length":..,"amplitude":..,"period":..,"noise_sigma":..,
// "seed":..,"injections":[{"type":"point","position":..,"span":..,"magnitude":..}]}
SineStreamSpec load_spec(const std::string& path);
SineStreamSpec parse_spec(const std::string& json_text);

// One value per line; labels file holds "label,type" per line.
void write_values(std::ostream& out, const SyntheticStream& s);
void write_labels(std::ostream& out, const SyntheticStream& s);

}  // namespace cubeforest::synth
