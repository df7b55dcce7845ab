#include "itoo/pipeline/dag.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace itoo {

void TaskDag::add_task(const std::string& name, std::vector<std::string> dependencies) {
    if (name.empty()) throw ContractError("task name must not be empty");
    if (deps.count(name)) throw ContractError("duplicate task '" + name + "'");
    tasks.push_back(name);
    deps[name] = std::move(dependencies);
}

std::map<std::string, std::vector<std::string>> TaskDag::dependents() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& t : tasks) out[t];
    for (const auto& t : tasks) {
        for (const auto& d : deps.at(t)) out[d].push_back(t);
    }
    return out;
}

TaskDag parse_dag(const std::string& text) {
    TaskDag dag;
    std::istringstream in(text);
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        std::string name = head;
        std::string rest;
        if (const auto colon = head.find(':'); colon != std::string::npos) {
            name = head.substr(0, colon);
            rest = head.substr(colon + 1);
        } else {
            std::string sep;
            if (!(ls >> sep) || sep.empty() || sep[0] != ':') throw ParseError("expected 'task: deps'", lineno);
            rest = sep.substr(1);
        }
        if (name.empty()) throw ParseError("missing task name", lineno);
        std::vector<std::string> deps;
        if (!rest.empty()) deps.push_back(rest);
        for (std::string d; ls >> d;) deps.push_back(d);
        try {
            dag.add_task(name, std::move(deps));
        } catch (const ContractError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return dag;
}

TaskDag load_dag(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open DAG file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_dag(ss.str());
}

namespace {

std::string join_path(const std::vector<std::string>& p) {
    std::string s = "[";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + p[i];
    return s + "]";
}

}  // namespace

CycleError::CycleError(std::vector<std::string> path)
    : ContractError("cycle " + join_path(path)), path_(std::move(path)) {}

std::vector<std::string> find_cycle(const TaskDag& dag) {
    const auto next = dag.dependents();
    std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
    std::vector<std::string> stack;
    std::vector<std::string> found;

    std::function<bool(const std::string&)> visit = [&](const std::string& u) {
        state[u] = 1;
        stack.push_back(u);
        const auto it = next.find(u);
        if (it != next.end()) {
            for (const auto& v : it->second) {
                if (state[v] == 1) {
                    auto from = std::find(stack.begin(), stack.end(), v);
                    found.assign(from, stack.end());
                    found.push_back(v);
                    return true;
                }
                if (state[v] == 0 && visit(v)) return true;
            }
        }
        stack.pop_back();
        state[u] = 2;
        return false;
    };
    for (const auto& t : dag.tasks) {
        if (state[t] == 0 && visit(t)) return found;
    }
    return {};
}

void validate_dag(const TaskDag& dag) {
    for (const auto& t : dag.tasks) {
        for (const auto& d : dag.deps.at(t)) {
            if (!dag.deps.count(d)) throw ContractError("task '" + t + "' depends on unknown task '" + d + "'");
        }
    }
    if (auto c = find_cycle(dag); !c.empty()) throw CycleError(std::move(c));
}

std::string_view to_string(TaskStatus s) {
    switch (s) {
        case TaskStatus::succeeded: return "succeeded";
        case TaskStatus::failed: return "failed";
        case TaskStatus::skipped: return "skipped";
    }
    return "skipped";
}

std::string DagRun::trace_json_lines() const {
    std::string out;
    for (const auto& t : trace) {
        nlohmann::json j{{"task", t.task}, {"start", t.start_ms}, {"end", t.end_ms}, {"worker", t.worker}};
        out += j.dump() + "\n";
    }
    return out;
}

DagRun execute_dag(const TaskDag& dag, std::size_t workers, const TaskFn& fn) {
    validate_dag(dag);
    if (workers == 0) throw ContractError("worker count must be >= 1");
    const auto next = dag.dependents();

    DagRun run;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> ready;
    std::map<std::string, std::size_t> remaining;
    std::size_t settled = 0;
    for (const auto& t : dag.tasks) {
        remaining[t] = dag.deps.at(t).size();
        if (remaining[t] == 0) ready.push_back(t);
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto ms_since = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };

    // Called with mu held.
    auto skip_descendants = [&](const std::string& root) {
        std::vector<std::string> todo(next.at(root).begin(), next.at(root).end());
        while (!todo.empty()) {
            auto d = todo.back();
            todo.pop_back();
            if (run.results.count(d)) continue;
            run.results[d] = {TaskStatus::skipped, {}, "dependency '" + root + "' did not succeed"};
            ++settled;
            for (const auto& e : next.at(d)) todo.push_back(e);
        }
    };

    auto worker = [&](int id) {
        std::unique_lock lock(mu);
        while (true) {
            cv.wait(lock, [&] { return !ready.empty() || settled == dag.tasks.size(); });
            if (ready.empty()) return;
            const std::string task = ready.front();
            ready.pop_front();
            std::map<std::string, std::string> inputs;
            for (const auto& d : dag.deps.at(task)) inputs[d] = run.results.at(d).output;
            lock.unlock();

            const double start = ms_since();
            TaskResult r;
            try {
                r.output = fn(task, inputs);
                r.status = TaskStatus::succeeded;
            } catch (const std::exception& e) {
                r.status = TaskStatus::failed;
                r.error = e.what();
            } catch (...) {
                r.status = TaskStatus::failed;
                r.error = "unknown error";
            }
            const double end = ms_since();

            lock.lock();
            run.trace.push_back({task, start, end, id});
            run.completion_order.push_back(task);
            const bool ok = r.status == TaskStatus::succeeded;
            run.results[task] = std::move(r);
            ++settled;
            if (ok) {
                for (const auto& d : next.at(task)) {
                    if (--remaining[d] == 0 && !run.results.count(d)) ready.push_back(d);
                }
            } else {
                skip_descendants(task);
            }
            cv.notify_all();
        }
    };

    std::vector<std::thread> pool;
    const std::size_t n = std::min(workers, std::max<std::size_t>(dag.tasks.size(), 1));
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker, static_cast<int>(w));
    for (auto& t : pool) t.join();
    return run;
}

}  // namespace itoo
