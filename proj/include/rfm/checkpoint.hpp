#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rfm/reactor.hpp"
#include "rfm/rnn.hpp"
#include "rfm/tasks.hpp"

namespace rfm {

/// Which tasks a model was trained on.
struct TaskFamily {
    ReactorKind kind = ReactorKind::Cstr;
    int order = 1;
    int count = 0;

    bool operator==(const TaskFamily&) const = default;
};

struct Provenance {
    std::vector<TaskFamily> families;
    std::uint64_t seed = 0;
    std::string method;  // "reptile", "transfer", "adapted", ...

    bool operator==(const Provenance&) const = default;
};

/// Network plus the normalization it was trained with. Shared read-only
/// between workers once built.
struct FoundationModel {
    RnnParams params;
    std::array<NormSpec, 3> norms{norm_spec(ReactorKind::Cstr), norm_spec(ReactorKind::Batch),
                                  norm_spec(ReactorKind::Pfr)};
    Provenance provenance;

    const NormSpec& norm(ReactorKind kind) const { return norms[static_cast<std::size_t>(kind)]; }

    /// Single training order when every family agrees, else 0.
    int order() const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const FoundationModel& model, const std::filesystem::path& path);
/// Throws MissingCheckpoint when the file is absent, std::runtime_error when
/// the file is malformed.
FoundationModel load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const FoundationModel& model);
FoundationModel decode_checkpoint(const std::string& bytes);

}  // namespace rfm
