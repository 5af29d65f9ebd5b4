#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace homesim {

// Invalid or inconsistent user input (config files, input tables, CLI flags).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}

    ConfigError(const std::string& header, std::vector<std::string> failures)
        : std::runtime_error(join(header, failures)), failures_(std::move(failures)) {}

    const std::vector<std::string>& failures() const noexcept { return failures_; }

private:
    static std::string join(const std::string& header, const std::vector<std::string>& items) {
        std::string out = header;
        for (const auto& item : items) {
            out += "\n  - ";
            out += item;
        }
        return out;
    }

    std::vector<std::string> failures_;
};

// Failure while a simulation is running (non-finite values, I/O on outputs).
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace homesim
