#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "sppc/model.hpp"

namespace sppc {

struct ProtocolError : Error { using Error::Error; };

enum class DropoutMode { uniform_burst, bernoulli_capped, trace };

DropoutMode parse_dropout_mode(std::string_view name);
std::string_view to_string(DropoutMode mode);

/// Packet erasure channel with at most N - 1 consecutive dropouts and a
/// guaranteed arrival at k = 0.
///
///   uniform_burst     after every arrival, a burst length is drawn uniformly
///                     from {0, ..., N-1}; that many drops follow, then an arrival
///   bernoulli_capped  each packet is dropped with probability p unless
///                     N - 1 drops have already occurred in a row
///   trace             explicit playback of a 0/1 sequence, validated up front
class DropoutProcess {
public:
    static DropoutProcess uniform_burst(int N, std::uint64_t seed);
    static DropoutProcess bernoulli_capped(int N, double p, std::uint64_t seed);
    static DropoutProcess trace(int N, std::vector<bool> arrivals);

    /// l(k): true iff the packet sent at step k arrives. Steps must be
    /// queried in order 0, 1, 2, ...
    bool next_arrival(long k);

    DropoutMode mode() const { return mode_; }
    int N_cap() const { return N_; }

private:
    DropoutProcess(DropoutMode mode, int N, std::uint64_t seed);

    DropoutMode mode_;
    int N_;
    Rng rng_;
    double p_ = 0.0;
    std::vector<bool> trace_;
    long next_k_ = 0;
    int pending_drops_ = 0;  // uniform_burst
    int run_ = 0;            // consecutive drops so far
};

/// Reads a newline-separated 0/1 trace. Blank lines are ignored.
std::vector<bool> read_trace(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, const std::vector<bool>& arrivals);

/// Actuator-side storage for the most recent packet.
struct ActuatorBuffer {
    std::optional<ControlPacket> stored_packet;
    int age = 0;
};

/// Overwrites the buffer on arrival (age 0), otherwise ages it by one.
/// Throws ProtocolError if the age would reach the packet length.
ActuatorBuffer buffer_update(const ActuatorBuffer& buf, std::optional<ControlPacket> incoming);

/// Element `age` of the stored packet.
double applied_input(const ActuatorBuffer& buf);

}  // namespace sppc
