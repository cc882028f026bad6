#pragma once

#include <stdexcept>
#include <string>

namespace semcom {

// Invalid configuration or shape mismatch between components.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during optimization (non-finite gradients, divergence).
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset file could not be parsed; message names the offending file.
struct IngestionError : std::runtime_error {
    explicit IngestionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed feedback-link frame; carries the byte offset of the defect.
struct ProtocolError : std::runtime_error {
    ProtocolError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// Checkpoint container unreadable or version-incompatible.
struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace semcom
