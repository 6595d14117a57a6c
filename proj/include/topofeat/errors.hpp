#pragma once

#include <stdexcept>
#include <string>

namespace topofeat {

struct EmptyCloud : std::runtime_error {
    EmptyCloud() : std::runtime_error("point cloud is empty") {}
};

struct InvalidFiltration : std::runtime_error {
    explicit InvalidFiltration(const std::string& what) : std::runtime_error("invalid filtration: " + what) {}
};

struct NotFinitized : std::runtime_error {
    NotFinitized() : std::runtime_error("diagram contains an infinite pair; finitize it first") {}
};

struct UndefinedMetric : std::runtime_error {
    explicit UndefinedMetric(const std::string& what) : std::runtime_error("undefined metric: " + what) {}
};

struct InsufficientClass : std::runtime_error {
    explicit InsufficientClass(const std::string& what) : std::runtime_error("insufficient class: " + what) {}
};

} // namespace topofeat
