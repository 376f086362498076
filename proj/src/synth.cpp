#include "cubeforest/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cubeforest/random.hpp"

namespace cubeforest::synth {

using eval::AnomalyType;

void SineStreamSpec::validate() const {
    if (length == 0) {
        throw std::invalid_argument("stream length must be positive");
    }
    if (!(period > 0.0)) {
        throw std::invalid_argument("period must be positive");
    }
    if (noise_sigma < 0.0) {
        throw std::invalid_argument("noise sigma must be nonnegative");
    }
    std::vector<const Injection*> sorted;
    for (const auto& inj : injections) {
        if (inj.type == AnomalyType::None) {
            throw std::invalid_argument("injection type must be point, contextual or collective");
        }
        if (inj.span < 1) {
            throw std::invalid_argument("injection span must be at least 1");
        }
        if (inj.type == AnomalyType::Point && inj.span != 1) {
            throw std::invalid_argument("point anomalies span exactly one sample");
        }
        if (inj.type == AnomalyType::Contextual && std::abs(inj.magnitude) > 1.0) {
            throw std::invalid_argument("contextual level must stay within the normal range [-1, 1]");
        }
        if (inj.position >= length || inj.span > length - inj.position) {
            throw std::invalid_argument("injection at " + std::to_string(inj.position) + " runs past the stream end");
        }
        sorted.push_back(&inj);
    }
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->position < b->position; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i - 1]->position + sorted[i - 1]->span > sorted[i]->position) {
            throw std::invalid_argument("injections at " + std::to_string(sorted[i - 1]->position) + " and " +
                                        std::to_string(sorted[i]->position) + " overlap");
        }
    }
}

SyntheticStream generate(const SineStreamSpec& spec) {
    spec.validate();
    SyntheticStream s;
    s.values.resize(spec.length);
    s.labels.assign(spec.length, false);
    s.types.assign(spec.length, AnomalyType::None);

    const double omega = 2.0 * std::numbers::pi / spec.period;
    Rng rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> eps(spec.length);
    for (auto& e : eps) {
        e = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise(rng) : 0.0;
    }
    for (std::size_t t = 0; t < spec.length; ++t) {
        s.values[t] = spec.amplitude * std::sin(omega * static_cast<double>(t)) + eps[t];
    }

    for (const auto& inj : spec.injections) {
        for (std::size_t t = inj.position; t < inj.position + inj.span; ++t) {
            switch (inj.type) {
                case AnomalyType::Point:
                    s.values[t] += inj.magnitude * spec.amplitude;
                    break;
                case AnomalyType::Contextual:
                    s.values[t] = inj.magnitude * spec.amplitude + eps[t];
                    break;
                case AnomalyType::Collective:
                    s.values[t] = spec.amplitude * std::sin(inj.magnitude * omega * static_cast<double>(t - inj.position)) +
                                  eps[t];
                    break;
                case AnomalyType::None:
                    break;
            }
            s.labels[t] = true;
            s.types[t] = inj.type;
        }
    }
    return s;
}

SyntheticStream shingle_labels(const SyntheticStream& series, std::size_t width) {
    if (width == 0) {
        throw std::invalid_argument("shingle width must be at least 1");
    }
    SyntheticStream out;
    if (series.values.size() < width) {
        return out;
    }
    const std::size_t n = series.values.size() - width + 1;
    out.values.assign(series.values.begin(), series.values.begin() + static_cast<std::ptrdiff_t>(n));
    out.labels.assign(n, false);
    out.types.assign(n, AnomalyType::None);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = t; k < t + width; ++k) {
            if (series.labels[k]) {
                out.labels[t] = true;
                out.types[t] = series.types[k];
                break;
            }
        }
    }
    return out;
}

SineStreamSpec parse_spec(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    SineStreamSpec spec;
    spec.length = j.value("length", spec.length);
    spec.amplitude = j.value("amplitude", spec.amplitude);
    spec.period = j.value("period", spec.period);
    spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
    spec.seed = j.value("seed", spec.seed);
    for (const auto& item : j.value("injections", nlohmann::json::array())) {
        Injection inj;
        inj.type = eval::parse_anomaly_type(item.at("type").get<std::string>());
        inj.position = item.at("position").get<std::size_t>();
        inj.span = item.value("span", std::size_t{1});
        inj.magnitude = item.value("magnitude", inj.type == AnomalyType::Point ? 3.0 : 1.0);
        spec.injections.push_back(inj);
    }
    spec.validate();
    return spec;
}

SineStreamSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open spec file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec(buf.str());
}

void write_values(std::ostream& out, const SyntheticStream& s) {
    out << std::setprecision(17);
    for (double v : s.values) {
        out << v << '\n';
    }
}

void write_labels(std::ostream& out, const SyntheticStream& s) {
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        out << (s.labels[i] ? 1 : 0) << ',' << eval::to_string(s.types[i]) << '\n';
    }
}

}  // namespace cubeforest::synth
