#include "ssa/seq_core.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "ssa/csv.hpp"
#include "ssa/error.hpp"

namespace ssa {

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw ValidationError("alphabet must have at least one symbol");
    if (symbols_.size() > 65535) throw ValidationError("alphabet too large");
    std::unordered_set<std::string> seen;
    for (const auto& s : symbols_) {
        if (s.empty()) throw ValidationError("alphabet labels must be non-empty");
        if (!seen.insert(s).second) throw ValidationError("duplicate alphabet label: " + s);
    }
}

AlphabetPtr Alphabet::binary() {
    static const AlphabetPtr instance =
        std::make_shared<const Alphabet>(std::vector<std::string>{kNoDrug, kDrug});
    return instance;
}

AlphabetPtr Alphabet::extended(std::vector<std::string> channel_names) {
    if (channel_names.empty()) throw ValidationError("extended alphabet needs at least one channel");
    if (channel_names.size() > 15) throw ValidationError("too many channels for extended alphabet");
    const std::size_t size = std::size_t{1} << channel_names.size();
    std::vector<std::string> labels;
    labels.reserve(size);
    for (std::size_t code = 0; code < size; ++code) {
        std::string label;
        for (std::size_t c = 0; c < channel_names.size(); ++c) {
            if (code & (std::size_t{1} << c)) {
                if (!label.empty()) label += '+';
                label += channel_names[c];
            }
        }
        labels.push_back(label.empty() ? "None" : label);
    }
    Alphabet a(std::move(labels));
    a.channel_names_ = std::move(channel_names);
    return std::make_shared<const Alphabet>(std::move(a));
}

std::optional<State> Alphabet::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        if (symbols_[i] == label) return static_cast<State>(i);
    return std::nullopt;
}

std::optional<std::size_t> Alphabet::channel_arity() const noexcept {
    if (channel_names_.empty()) return std::nullopt;
    return channel_names_.size();
}

bool Alphabet::is_binary() const noexcept {
    return channel_names_.empty() && symbols_.size() == 2 && symbols_[0] == kNoDrug &&
           symbols_[1] == kDrug;
}

bool same_alphabet(const AlphabetPtr& a, const AlphabetPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return *a == *b;
}

SequenceSet validate_set(std::vector<StateSequence> sequences) {
    if (sequences.empty()) throw ValidationError("sequence set must not be empty");
    std::vector<std::string> violations;
    const auto& first = sequences.front();
    if (!first.alphabet) throw ValidationError("sequence " + first.subject_id + " has no alphabet");
    std::set<std::string> seen;
    for (const auto& s : sequences) {
        if (!seen.insert(s.subject_id).second)
            violations.push_back("duplicate subject_id: " + s.subject_id);
        if (s.length() != first.length())
            violations.push_back("length mismatch: " + s.subject_id + " has " +
                                 std::to_string(s.length()) + " states, expected " +
                                 std::to_string(first.length()));
        if (!same_alphabet(s.alphabet, first.alphabet)) {
            violations.push_back("alphabet mismatch: " + s.subject_id);
            continue;
        }
        auto bad = std::find_if(s.states.begin(), s.states.end(),
                                [&](State st) { return st >= first.alphabet->size(); });
        if (bad != s.states.end())
            violations.push_back("state out of range in " + s.subject_id + " at position " +
                                 std::to_string(bad - s.states.begin() + 1));
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));

    SequenceSet set;
    set.alphabet_ = first.alphabet;
    set.length_ = first.length();
    // One canonical alphabet object per set.
    for (auto& s : sequences) s.alphabet = set.alphabet_;
    set.sequences_ = std::move(sequences);
    return set;
}

StateSequence combine_channels(std::span<const StateSequence> channels, const AlphabetPtr& extended) {
    if (!extended || !extended->channel_arity())
        throw ValidationError("combine_channels needs an extended alphabet");
    if (channels.size() != *extended->channel_arity())
        throw ValidationError("expected " + std::to_string(*extended->channel_arity()) +
                              " channels, got " + std::to_string(channels.size()));
    const auto& names = extended->channel_names();
    std::vector<std::string> violations;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        if (!channels[c].alphabet || !channels[c].alphabet->is_binary())
            violations.push_back("channel " + names[c] + " is not binary NoDrug/Drug");
    }
    bool length_ok = std::all_of(channels.begin(), channels.end(), [&](const StateSequence& s) {
        return s.length() == channels.front().length();
    });
    if (!length_ok) {
        std::ostringstream msg;
        msg << "channel length mismatch:";
        for (std::size_t c = 0; c < channels.size(); ++c)
            msg << ' ' << names[c] << '=' << channels[c].length();
        violations.push_back(msg.str());
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));

    StateSequence out;
    out.subject_id = channels.front().subject_id;
    out.alphabet = extended;
    out.states.assign(channels.front().length(), 0);
    for (std::size_t c = 0; c < channels.size(); ++c) {
        for (std::size_t t = 0; t < out.states.size(); ++t) {
            if (channels[c].states[t] > 1) throw ValidationError("non-binary state in channel " + names[c]);
            out.states[t] = static_cast<State>(out.states[t] | (channels[c].states[t] << c));
        }
    }
    return out;
}

StateSequence project_channel(const StateSequence& combined, std::size_t channel) {
    if (!combined.alphabet || !combined.alphabet->channel_arity() ||
        channel >= *combined.alphabet->channel_arity())
        throw ValidationError("project_channel: channel out of range");
    StateSequence out;
    out.subject_id = combined.subject_id;
    out.alphabet = Alphabet::binary();
    out.states.reserve(combined.length());
    for (State s : combined.states) out.states.push_back(static_cast<State>((s >> channel) & 1u));
    return out;
}

std::vector<State> decode_state(State combined, std::size_t n_channels) {
    std::vector<State> bits(n_channels);
    for (std::size_t c = 0; c < n_channels; ++c) bits[c] = static_cast<State>((combined >> c) & 1u);
    return bits;
}

void write_sequence_csv(std::ostream& out, const SequenceSet& set) {
    out << "subject_id";
    for (std::size_t w = 1; w <= set.length(); ++w) out << ",w" << w;
    out << '\n';
    const auto& alpha = *set.alphabet();
    for (const auto& s : set.sequences()) {
        out << s.subject_id;
        for (State st : s.states) out << ',' << alpha.label(st);
        out << '\n';
    }
}

void write_sequence_csv(const std::filesystem::path& path, const SequenceSet& set) {
    std::ostringstream buf;
    write_sequence_csv(buf, set);
    csv::write_file(path, buf.str());
}

SequenceSet read_sequence_csv(std::istream& in, const AlphabetPtr& alphabet) {
    auto table = csv::read(in);
    if (table.header.empty() || table.header[0] != "subject_id")
        throw ValidationError("sequence csv: header must start with subject_id");
    const std::size_t length = table.header.size() - 1;
    std::vector<std::string> errors;
    std::vector<StateSequence> seqs;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = std::to_string(table.line_numbers[r]);
        if (row.size() != length + 1) {
            errors.push_back("line " + line + ": expected " + std::to_string(length + 1) +
                             " columns, got " + std::to_string(row.size()));
            continue;
        }
        StateSequence s{row[0], alphabet, {}};
        s.states.reserve(length);
        for (std::size_t c = 1; c < row.size(); ++c) {
            auto idx = alphabet->index_of(row[c]);
            if (!idx) {
                errors.push_back("line " + line + ", column " + std::to_string(c + 1) +
                                 ": unknown state label '" + row[c] + "'");
                break;
            }
            s.states.push_back(*idx);
        }
        seqs.push_back(std::move(s));
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return validate_set(std::move(seqs));
}

SequenceSet read_sequence_csv(const std::filesystem::path& path, const AlphabetPtr& alphabet) {
    auto in = csv::open_in(path);
    return read_sequence_csv(in, alphabet);
}

}  // namespace ssa
