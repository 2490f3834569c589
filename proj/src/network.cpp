#include "sppc/network.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace sppc {

DropoutMode parse_dropout_mode(std::string_view name) {
    if (name == "uniform_burst") return DropoutMode::uniform_burst;
    if (name == "bernoulli_capped") return DropoutMode::bernoulli_capped;
    if (name == "trace") return DropoutMode::trace;
    throw ContractError("unknown dropout mode '" + std::string(name) + "'");
}

std::string_view to_string(DropoutMode mode) {
    switch (mode) {
        case DropoutMode::uniform_burst: return "uniform_burst";
        case DropoutMode::bernoulli_capped: return "bernoulli_capped";
        case DropoutMode::trace: return "trace";
    }
    return "unknown";
}

DropoutProcess::DropoutProcess(DropoutMode mode, int N, std::uint64_t seed)
    : mode_(mode), N_(N), rng_(seed) {
    if (N < 1) {
        throw ContractError("DropoutProcess: N must be >= 1");
    }
}

DropoutProcess DropoutProcess::uniform_burst(int N, std::uint64_t seed) {
    return DropoutProcess(DropoutMode::uniform_burst, N, seed);
}

DropoutProcess DropoutProcess::bernoulli_capped(int N, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ContractError("DropoutProcess: drop probability must lie in [0, 1]");
    }
    DropoutProcess dp(DropoutMode::bernoulli_capped, N, seed);
    dp.p_ = p;
    return dp;
}

DropoutProcess DropoutProcess::trace(int N, std::vector<bool> arrivals) {
    if (arrivals.empty() || !arrivals.front()) {
        throw ContractError("DropoutProcess: trace must start with an arrival");
    }
    int run = 0;
    for (size_t k = 0; k < arrivals.size(); ++k) {
        run = arrivals[k] ? 0 : run + 1;
        if (run >= N) {
            std::ostringstream os;
            os << "DropoutProcess: trace has " << run << " consecutive dropouts ending at step " << k
               << " (cap is " << N - 1 << ")";
            throw ContractError(os.str());
        }
    }
    DropoutProcess dp(DropoutMode::trace, N, 0);
    dp.trace_ = std::move(arrivals);
    return dp;
}

bool DropoutProcess::next_arrival(long k) {
    if (k != next_k_) {
        std::ostringstream os;
        os << "DropoutProcess: expected step " << next_k_ << ", got " << k;
        throw ContractError(os.str());
    }
    ++next_k_;

    bool arrived = true;
    switch (mode_) {
        case DropoutMode::trace:
            if (static_cast<size_t>(k) >= trace_.size()) {
                throw ContractError("DropoutProcess: step beyond the end of the trace");
            }
            arrived = trace_[k];
            break;
        case DropoutMode::uniform_burst:
            if (k == 0) {
                arrived = true;
            } else if (pending_drops_ > 0) {
                --pending_drops_;
                arrived = false;
            } else {
                arrived = true;
            }
            if (arrived) {
                std::uniform_int_distribution<int> burst(0, N_ - 1);
                pending_drops_ = burst(rng_);
            }
            break;
        case DropoutMode::bernoulli_capped: {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const bool drop = unit(rng_) < p_;
            arrived = (k == 0) || run_ >= N_ - 1 || !drop;
            break;
        }
    }
    run_ = arrived ? 0 : run_ + 1;
    return arrived;
}

std::vector<bool> read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open trace file " + path.string());
    }
    std::vector<bool> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        if (line.empty()) continue;
        if (line == "1") {
            out.push_back(true);
        } else if (line == "0") {
            out.push_back(false);
        } else {
            throw ContractError(path.string() + ":" + std::to_string(lineno) +
                                ": expected 0 or 1, got '" + line + "'");
        }
    }
    return out;
}

void write_trace(const std::filesystem::path& path, const std::vector<bool>& arrivals) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write trace file " + path.string());
    }
    for (bool a : arrivals) out << (a ? "1\n" : "0\n");
    if (!out) {
        throw Error("error writing trace file " + path.string());
    }
}

ActuatorBuffer buffer_update(const ActuatorBuffer& buf, std::optional<ControlPacket> incoming) {
    if (incoming) {
        if (buf.stored_packet && incoming->origin_time < buf.stored_packet->origin_time) {
            throw ProtocolError("buffer_update: incoming packet is older than the stored one");
        }
        return ActuatorBuffer{std::move(incoming), 0};
    }
    if (!buf.stored_packet) {
        throw ProtocolError("buffer_update: no packet has ever arrived");
    }
    const int next_age = buf.age + 1;
    if (next_age >= buf.stored_packet->horizon()) {
        std::ostringstream os;
        os << "buffer_update: buffer age would reach " << next_age
           << " (packet length " << buf.stored_packet->horizon() << ")";
        throw ProtocolError(os.str());
    }
    return ActuatorBuffer{buf.stored_packet, next_age};
}

double applied_input(const ActuatorBuffer& buf) {
    if (!buf.stored_packet) {
        throw ProtocolError("applied_input: buffer is empty");
    }
    return buf.stored_packet->U(buf.age);
}

}  // namespace sppc
