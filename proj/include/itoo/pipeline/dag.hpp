#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "itoo/core/errors.hpp"

namespace itoo {

/// Tasks with their dependencies, in declaration order.
struct TaskDag {
    std::vector<std::string> tasks;
    std::map<std::string, std::vector<std::string>> deps;

    void add_task(const std::string& name, std::vector<std::string> dependencies = {});
    std::map<std::string, std::vector<std::string>> dependents() const;
};

/// Lines of `task: dep1 dep2`; blank lines and `#` comments ignored. Throws ParseError.
TaskDag parse_dag(const std::string& text);
TaskDag load_dag(const std::filesystem::path& path);

class CycleError : public ContractError {
public:
    explicit CycleError(std::vector<std::string> path);
    const std::vector<std::string>& path() const { return path_; }

private:
    std::vector<std::string> path_;
};

/// First cycle found walking dependency -> dependent edges, as [a, b, ..., a].
std::vector<std::string> find_cycle(const TaskDag& dag);

/// Throws ContractError for unknown dependencies and CycleError for cycles.
void validate_dag(const TaskDag& dag);

enum class TaskStatus { succeeded, failed, skipped };
std::string_view to_string(TaskStatus s);

struct TaskResult {
    TaskStatus status = TaskStatus::skipped;
    std::string output;
    std::string error;
};

struct TraceEntry {
    std::string task;
    double start_ms = 0.0;
    double end_ms = 0.0;
    int worker = 0;
};

struct DagRun {
    std::map<std::string, TaskResult> results;
    std::vector<TraceEntry> trace;
    std::vector<std::string> completion_order;  // executed tasks in finishing order

    std::string trace_json_lines() const;
};

/// Receives the task name and the outputs of its dependencies.
using TaskFn = std::function<std::string(const std::string&, const std::map<std::string, std::string>&)>;

/// Runs every task once after its dependencies on a pool of `workers` threads. A task that
/// throws is marked failed and all of its descendants skipped.
DagRun execute_dag(const TaskDag& dag, std::size_t workers, const TaskFn& fn);

}  // namespace itoo
