#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skillcalc {

struct UnknownCharacter : std::runtime_error {
    std::size_t position;
    explicit UnknownCharacter(std::size_t pos)
        : std::runtime_error("unknown character at position " + std::to_string(pos)),
          position(pos) {}
};

struct SyntaxError : std::runtime_error {
    std::size_t position;
    SyntaxError(std::size_t pos, const std::string& what)
        : std::runtime_error("syntax error at position " + std::to_string(pos) + ": " + what),
          position(pos) {}
};

struct DivisionByZero : std::runtime_error {
    DivisionByZero() : std::runtime_error("division by zero") {}
};

struct InexactDivision : std::runtime_error {
    InexactDivision() : std::runtime_error("division with nonzero remainder") {}
};

struct GenerationExhausted : std::runtime_error {
    explicit GenerationExhausted(const std::string& task = "")
        : std::runtime_error("rejection sampling budget exhausted" +
                             (task.empty() ? "" : " for " + task)) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error("io error: " + what) {}
};

struct FormatError : std::runtime_error {
    std::size_t line;
    explicit FormatError(std::size_t line_no, const std::string& what = "")
        : std::runtime_error("format error at line " + std::to_string(line_no) +
                             (what.empty() ? "" : ": " + what)),
          line(line_no) {}
};

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what)
        : std::runtime_error("shape mismatch: " + what) {}
};

struct IdOutOfRange : std::runtime_error {
    explicit IdOutOfRange(const std::string& what)
        : std::runtime_error("id out of range: " + what) {}
    explicit IdOutOfRange(long id) : IdOutOfRange(std::to_string(id)) {}
};

struct EmptySequence : std::runtime_error {
    explicit EmptySequence(const std::string& where = "")
        : std::runtime_error(where.empty() ? "empty sequence" : "empty sequence: " + where) {}
};

struct EmptyMemory : std::runtime_error {
    EmptyMemory() : std::runtime_error("empty memory") {}
};

struct CheckpointVersionMismatch : std::runtime_error {
    explicit CheckpointVersionMismatch(const std::string& what)
        : std::runtime_error("checkpoint version mismatch: " + what) {}
};

struct CapacityExceeded : std::runtime_error {
    explicit CapacityExceeded(const std::string& what)
        : std::runtime_error("capacity exceeded: " + what) {}
};

struct LengthMismatch : std::runtime_error {
    explicit LengthMismatch(const std::string& what)
        : std::runtime_error("length mismatch: " + what) {}
};

// Thrown by a skill module that cannot process the given input.
struct SubmoduleError : std::runtime_error {
    explicit SubmoduleError(const std::string& what)
        : std::runtime_error("submodule rejected input: " + what) {}
};

struct DatasetEmpty : std::runtime_error {
    explicit DatasetEmpty(const std::string& what = "")
        : std::runtime_error(what.empty() ? "dataset is empty" : "dataset is empty: " + what) {}
};

struct NonFiniteLoss : std::runtime_error {
    explicit NonFiniteLoss(const std::string& what)
        : std::runtime_error("non-finite loss: " + what) {}
};

struct UnsupportedTask : std::runtime_error {
    explicit UnsupportedTask(const std::string& task)
        : std::runtime_error("unsupported task: " + task) {}
};

struct MissingModule : std::runtime_error {
    explicit MissingModule(const std::string& task)
        : std::runtime_error("missing module for task: " + task) {}
};

struct TaskFailed : std::runtime_error {
    std::string task;
    explicit TaskFailed(const std::string& t)
        : std::runtime_error("task failed to reach mastery: " + t), task(t) {}
};

struct BudgetExhausted : std::runtime_error {
    explicit BudgetExhausted(const std::string& what)
        : std::runtime_error("budget exhausted: " + what) {}
};

struct IndexOutOfRange : std::runtime_error {
    explicit IndexOutOfRange(const std::string& what)
        : std::runtime_error("index out of range: " + what) {}
};

}  // namespace skillcalc
