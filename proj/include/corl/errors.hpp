#pragma once

#include <stdexcept>
#include <string>

namespace corl {

// Data-file problems. kind + record index survive up to the CLI so the
// offending line can be reported.
class DataError : public std::runtime_error {
public:
    enum class Kind { VersionMismatch, DimensionMismatch, CorruptRecord, EmptyEpisode, BadArgument, Io };

    DataError(Kind kind, std::string msg, long record_index = -1)
        : std::runtime_error(std::move(msg)), kind_(kind), record_index_(record_index) {}

    Kind kind() const { return kind_; }
    long record_index() const { return record_index_; }

private:
    Kind kind_;
    long record_index_;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Shape mismatch inside the network stack; carries the layer / tensor name.
class ShapeError : public std::runtime_error {
public:
    ShapeError(std::string where, std::string msg)
        : std::runtime_error(where + ": " + msg), where_(std::move(where)) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

// Non-finite loss or gradient during training.
class TrainingAbort : public std::runtime_error {
public:
    TrainingAbort(std::string msg, long step = -1) : std::runtime_error(std::move(msg)), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

}  // namespace corl
