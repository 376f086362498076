#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cubeforest/matrix.hpp"
#include "cubeforest/stream.hpp"

namespace cubeforest::ingest {

// A benchmark with the shape and anomaly fraction it is expected to have.
struct DatasetSpec {
    std::string name;
    std::string file;              // relative to the data directory
    std::size_t rows = 0;
    std::size_t attributes = 0;
    double anomaly_fraction = 0.0;
};

const std::vector<DatasetSpec>& benchmark_registry();
const DatasetSpec* find_benchmark(std::string_view name);

// Environment variable naming the benchmark data directory.
inline constexpr const char* kDataDirEnv = "CUBEFOREST_DATA_DIR";

struct CsvOptions {
    char delimiter = ',';
    // nullopt: a first line holding any non-numeric cell is taken as a header
    std::optional<bool> header;
    // column holding the label; negative counts from the end, nullopt = unlabeled
    std::optional<int> label_column = -1;
    std::vector<std::string> positive_labels = {"1"};
};

struct LabeledDataset {
    Matrix features;
    std::vector<bool> labels;  // empty when unlabeled
    std::vector<std::string> columns;

    std::size_t anomaly_count() const;
};

using WarningSink = std::function<void(const std::string&)>;

LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {},
                        const DatasetSpec* expected = nullptr, const WarningSink& warn = {});

void write_csv(std::ostream& out, const LabeledDataset& data);

// Loads a registry benchmark by name from `dir`, warning on shape mismatches.
LabeledDataset load_benchmark(const DatasetSpec& spec, const std::filesystem::path& dir, const WarningSink& warn = {});

enum class MalformedPolicy { Abort, Skip };

struct StreamOptions {
    bool header = false;  // skip the first line
    bool trailing_label = false;
    MalformedPolicy malformed = MalformedPolicy::Abort;
    char delimiter = ',';
};

// Line-delimited numeric records, read lazily one line at a time.
class StreamSource final : public stream::PointSource {
public:
    StreamSource(std::istream& in, StreamOptions options = {}, WarningSink warn = {});

    std::optional<stream::LabeledPoint> next() override;

    std::size_t lines_read() const noexcept { return line_no_; }
    std::size_t skipped() const noexcept { return skipped_; }

private:
    std::optional<stream::LabeledPoint> parse(const std::string& line, std::string& error) const;

    std::istream& in_;
    StreamOptions options_;
    WarningSink warn_;
    std::size_t line_no_ = 0;
    std::size_t skipped_ = 0;
    std::optional<std::size_t> dimension_;
};

// Per-feature min-max scaling fitted once, on the bootstrap window only.
class MinMaxScaler {
public:
    static MinMaxScaler fit(const Matrix& window);

    void transform(std::span<double> point) const;
    Matrix transform(const Matrix& rows) const;

    const std::vector<double>& minimum() const noexcept { return lo_; }
    const std::vector<double>& maximum() const noexcept { return hi_; }

private:
    std::vector<double> lo_, hi_;
};

// Applies a scaler fitted on the first `window` points to every point.
class ScalingSource final : public stream::PointSource {
public:
    ScalingSource(stream::PointSource& inner, std::size_t window);
    std::optional<stream::LabeledPoint> next() override;

private:
    stream::PointSource& inner_;
    std::size_t window_;
    std::vector<stream::LabeledPoint> pending_;
    std::size_t pending_pos_ = 0;
    std::optional<MinMaxScaler> scaler_;
};

}  // namespace cubeforest::ingest
