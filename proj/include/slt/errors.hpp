#pragma once

#include <stdexcept>
#include <string>

namespace slt {

// Estimation or sampler-diagnostic failure (CLI exit code 3).
struct estimation_error : std::runtime_error {
    explicit estimation_error(const std::string& what) : std::runtime_error(what) {}
};

// File read/write failure (CLI exit code 4).
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slt
