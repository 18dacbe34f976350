#pragma once

// Alphabets, fixed-length state sequences and the extended-alphabet
// combination of several binary drug channels into one sequence.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssa {

using State = std::uint16_t;

// Labels of the binary per-channel alphabet.
inline constexpr const char* kNoDrug = "NoDrug";
inline constexpr const char* kDrug = "Drug";
inline constexpr State kNoDrugState = 0;
inline constexpr State kDrugState = 1;

// Channel order used throughout: bit 0 = RAS, bit 1 = BB, bit 2 = AA.
inline const std::vector<std::string> kDefaultChannels = {"RAS", "BB", "AA"};

class Alphabet {
public:
    // Throws ValidationError on empty, duplicate or blank labels.
    explicit Alphabet(std::vector<std::string> symbols);

    static std::shared_ptr<const Alphabet> binary();

    // Product alphabet of |channels| binary channels: index = sum(bit_c << c),
    // label = "+"-joined names of active channels, "None" when none is active.
    static std::shared_ptr<const Alphabet> extended(std::vector<std::string> channel_names);

    std::size_t size() const noexcept { return symbols_.size(); }
    const std::string& label(State s) const { return symbols_.at(s); }
    const std::vector<std::string>& symbols() const noexcept { return symbols_; }
    std::optional<State> index_of(std::string_view label) const;

    // Present only for extended alphabets.
    std::optional<std::size_t> channel_arity() const noexcept;
    const std::vector<std::string>& channel_names() const noexcept { return channel_names_; }

    bool is_binary() const noexcept;

    friend bool operator==(const Alphabet& a, const Alphabet& b) {
        return a.symbols_ == b.symbols_ && a.channel_names_ == b.channel_names_;
    }

private:
    std::vector<std::string> symbols_;
    std::vector<std::string> channel_names_;
};

using AlphabetPtr = std::shared_ptr<const Alphabet>;

bool same_alphabet(const AlphabetPtr& a, const AlphabetPtr& b);

struct StateSequence {
    std::string subject_id;
    AlphabetPtr alphabet;
    std::vector<State> states;

    std::size_t length() const noexcept { return states.size(); }
};

class SequenceSet {
public:
    const AlphabetPtr& alphabet() const noexcept { return alphabet_; }
    const std::vector<StateSequence>& sequences() const noexcept { return sequences_; }
    std::size_t size() const noexcept { return sequences_.size(); }
    std::size_t length() const noexcept { return length_; }
    const StateSequence& operator[](std::size_t i) const { return sequences_[i]; }

private:
    friend SequenceSet validate_set(std::vector<StateSequence> sequences);
    AlphabetPtr alphabet_;
    std::vector<StateSequence> sequences_;
    std::size_t length_ = 0;
};

// Checks shared alphabet, equal length, unique ids and in-range states.
// Throws ValidationError listing every violation.
SequenceSet validate_set(std::vector<StateSequence> sequences);

// Combines per-channel binary sequences of one subject (in channel order)
// into a sequence over `extended`.
StateSequence combine_channels(std::span<const StateSequence> channels, const AlphabetPtr& extended);

// Inverse of combine_channels for a single channel.
StateSequence project_channel(const StateSequence& combined, std::size_t channel);

// Bit tuple encoded by an extended-alphabet state.
std::vector<State> decode_state(State combined, std::size_t n_channels);

// Wide CSV: `subject_id,w1,...,wL`, cells are alphabet labels.
void write_sequence_csv(std::ostream& out, const SequenceSet& set);
void write_sequence_csv(const std::filesystem::path& path, const SequenceSet& set);
SequenceSet read_sequence_csv(std::istream& in, const AlphabetPtr& alphabet);
SequenceSet read_sequence_csv(const std::filesystem::path& path, const AlphabetPtr& alphabet);

}  // namespace ssa
