#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace efce {

// Players are indexed 0..N-1. Nature is a distinguished pseudo-player.
struct PlayerId {
    int32_t index = 0;

    static constexpr int32_t kNature = -1;

    static PlayerId nature() { return PlayerId{kNature}; }
    static PlayerId regular(int32_t n) { return PlayerId{n}; }

    bool is_nature() const { return index == kNature; }
    bool is_regular() const { return index >= 0; }

    friend bool operator==(PlayerId a, PlayerId b) { return a.index == b.index; }
    friend bool operator!=(PlayerId a, PlayerId b) { return a.index != b.index; }
    friend bool operator<(PlayerId a, PlayerId b) { return a.index < b.index; }
};

// Opaque 64-bit information-set identifier. Each game packs its own encoding;
// ids are unique within one game across players and nature.
struct InfoSetId {
    uint64_t v = 0;

    friend bool operator==(InfoSetId a, InfoSetId b) { return a.v == b.v; }
    friend bool operator!=(InfoSetId a, InfoSetId b) { return a.v != b.v; }
    friend bool operator<(InfoSetId a, InfoSetId b) { return a.v < b.v; }
};

// Actions are labeled 1..A_i. Zero is reserved for the "don't care" entry of
// reduced strategies.
inline constexpr int kStarAction = 0;

// Game type (Gamma, r_max): sequence-complexity upper bound and regret bound.
struct GameType {
    double gamma = 0.0;
    double r_max = 0.0;
};

struct InfoSetDescriptor {
    InfoSetId id;
    PlayerId owner;
    int action_count = 0;
};

using UtilityVector = std::vector<double>;

// ---------------------------------------------------------------------------
// Error taxonomy. All conditions are programming or sizing errors; exceptions
// keep call sites clean.

struct EfceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingAction : EfceError {
    using EfceError::EfceError;
};
struct MalformedGame : EfceError {
    using EfceError::EfceError;
};
struct InvalidSpec : EfceError {
    using EfceError::EfceError;
};
struct SizeExceeded : EfceError {
    using EfceError::EfceError;
};
struct TooLarge : EfceError {
    using EfceError::EfceError;
};
struct DomainError : EfceError {
    using EfceError::EfceError;
};
struct SkeletonInsufficient : EfceError {
    using EfceError::EfceError;
};
struct ConfigError : EfceError {
    using EfceError::EfceError;
};
struct IOError : EfceError {
    using EfceError::EfceError;
};

// Default guard against runaway walks on defective game implementations.
inline constexpr std::size_t kDefaultDepthCap = 1000000;

}  // namespace efce

template <>
struct std::hash<efce::InfoSetId> {
    std::size_t operator()(const efce::InfoSetId& i) const noexcept {
        return std::hash<uint64_t>{}(i.v);
    }
};
