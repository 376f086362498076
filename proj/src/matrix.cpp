#include "cubeforest/matrix.hpp"

#include <algorithm>
#include <string>

namespace cubeforest {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    for (const auto& r : rows) {
        push_row(std::vector<double>(r));
    }
}

Matrix Matrix::from_rows(const std::vector<FeatureVector>& rows) {
    Matrix m;
    for (const auto& r : rows) {
        m.push_row(r);
    }
    return m;
}

void Matrix::push_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = values.size();
    } else if (values.size() != cols_) {
        throw std::invalid_argument("row has " + std::to_string(values.size()) +
                                    " values, expected " + std::to_string(cols_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= rows_) {
            throw std::out_of_range("row index " + std::to_string(indices[k]) + " out of range");
        }
        auto src = row(indices[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
}

}  // namespace cubeforest
