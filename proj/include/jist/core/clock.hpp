#pragma once

#include <chrono>
#include <cstdint>
#include <string>

#include "jist/core/error.hpp"

namespace jist {

/// Planning clock. `Wall` reads a monotonic clock. `Work` advances by counted
/// units of work (collision checks and steering iterations) times a fixed
/// nominal cost, so timestamps and time budgets are reproducible bit for bit.
class PlanClock {
public:
    enum class Mode { Wall, Work };

    /// Nominal seconds charged per unit of work in `Work` mode.
    static constexpr double kSecondsPerWorkUnit = 2.0e-6;

    explicit PlanClock(Mode mode = Mode::Wall)
        : mode_(mode), start_(std::chrono::steady_clock::now()) {}

    void charge(std::uint64_t units = 1) { work_ += units; }

    double elapsed() const {
        if (mode_ == Mode::Work) return static_cast<double>(work_) * kSecondsPerWorkUnit;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    Mode mode() const { return mode_; }
    std::uint64_t work() const { return work_; }

private:
    Mode mode_;
    std::chrono::steady_clock::time_point start_;
    std::uint64_t work_ = 0;
};

inline PlanClock::Mode parse_clock_mode(const std::string& s) {
    if (s == "wall") return PlanClock::Mode::Wall;
    if (s == "work") return PlanClock::Mode::Work;
    throw ContractError("unknown clock mode '" + s + "' (expected wall|work)");
}

inline std::string to_string(PlanClock::Mode m) {
    return m == PlanClock::Mode::Work ? "work" : "wall";
}

}  // namespace jist
