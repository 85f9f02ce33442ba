#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nomafl::selection {

enum class Policy {
    ser_dsm,                // accept iff SER_k <= tr_ser
    packet_error_baseline,  // accept iff the device's frame arrived error-free
    no_selection,           // accept everyone
};

/// Whether SER-DSM gates on the analytic SER or on realized error counts.
enum class AcceptanceMode { analytic, empirical };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);
std::string to_string(AcceptanceMode m);
AcceptanceMode acceptance_mode_from_string(const std::string& s);

struct SelectionConfig {
    double tr_ser = 1e-2;
    Policy policy = Policy::ser_dsm;
    AcceptanceMode mode = AcceptanceMode::analytic;

    void validate() const;
};

/// Largest tolerated error count floor(q * tr). The product is nudged by a
/// few ulps so that e.g. 100 * 0.29 counts as 29.
std::size_t tolerated_errors(std::size_t q, double tr_ser);

bool accept(double ser, double tr_ser);
bool accept_empirical(std::size_t error_count, std::size_t q, double tr_ser);
bool accept_packet_baseline(std::size_t error_count);

struct SelectionDecision {
    std::vector<int> accepted;     // c_k
    std::vector<double> weights;   // D_k * a_k * c_k
    double total_weight = 0.0;
};

/// Applies the configured policy to one round. `errors` holds realized
/// symbol-error counts per device (q symbols each).
SelectionDecision decide(const SelectionConfig& cfg, std::span<const double> ser,
                         std::span<const std::size_t> errors, std::size_t q,
                         std::span<const double> data_sizes, std::span<const int> schedule);

/// Error-aware FedAvg: sum_k D_k a_k c_k w_k / sum_k D_k a_k c_k.
/// Throws NoParticipants when the effective weight is zero.
std::vector<double> aggregate(const std::vector<std::vector<double>>& local_params,
                              std::span<const double> data_sizes, std::span<const int> schedule,
                              std::span<const int> accepted);

}  // namespace nomafl::selection
