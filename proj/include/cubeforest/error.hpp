#pragma once

#include <stdexcept>
#include <string>

namespace cubeforest {

// Malformed or insufficient input data (as opposed to a bad argument).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cubeforest
