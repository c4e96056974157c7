#include "bcsfl/ledger.hpp"

#include <openssl/evp.h>

#include <istream>
#include <ostream>
#include <stdexcept>

namespace bcsfl {

namespace {

void append_be(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) {
        out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xff));
    }
}

void append_string(std::vector<std::uint8_t>& out, const std::string& s) {
    append_be(out, s.size(), 4);
    out.insert(out.end(), s.begin(), s.end());
}

Digest next_hash(const Digest& prev, const NodeJoinedEvent& event) {
    std::vector<std::uint8_t> buf(prev.begin(), prev.end());
    const std::vector<std::uint8_t> enc = encode_event(event);
    buf.insert(buf.end(), enc.begin(), enc.end());
    return sha256(buf.data(), buf.size());
}

}  // namespace

std::vector<std::uint8_t> encode_event(const NodeJoinedEvent& event) {
    std::vector<std::uint8_t> out;
    append_be(out, event.id, 8);
    append_string(out, event.owner);
    append_string(out, event.node_id);
    return out;
}

Digest sha256(const std::uint8_t* data, std::size_t len) {
    Digest out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
        out_len != out.size()) {
        throw std::runtime_error("sha256: digest computation failed");
    }
    return out;
}

std::uint64_t join_bcsfl(LedgerState& state, const std::string& caller,
                         const std::string& node_id) {
    if (node_id.empty()) {
        throw std::invalid_argument("join_bcsfl: node_id must be non-empty");
    }
    const std::uint64_t assigned_id = state.total_nodes();
    NodeJoinedEvent event{assigned_id, caller, node_id};
    const Digest prev = state.chain.empty() ? Digest{} : state.chain.back();
    state.records.push_back({caller, node_id});
    state.events.push_back(event);
    state.chain.push_back(next_hash(prev, event));
    return assigned_id;
}

const UavNodeRecord& get_node_by_id(const LedgerState& state, std::uint64_t id) {
    if (id >= state.total_nodes()) {
        throw std::out_of_range("get_node_by_id: no node with id " + std::to_string(id));
    }
    return state.records[id];
}

bool verify_chain(const LedgerState& state) {
    if (state.chain.size() != state.events.size()) {
        return false;
    }
    Digest prev{};
    for (std::size_t i = 0; i < state.events.size(); ++i) {
        const Digest expected = next_hash(prev, state.events[i]);
        if (expected != state.chain[i]) {
            return false;
        }
        prev = state.chain[i];
    }
    return true;
}

namespace {

std::string escape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (i + 1 >= s.size()) {
            throw std::runtime_error("ledger load: dangling escape");
        }
        switch (s[++i]) {
            case '\\': out += '\\'; break;
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            default: throw std::runtime_error("ledger load: bad escape");
        }
    }
    return out;
}

}  // namespace

void dump_ledger(const LedgerState& state, std::ostream& out) {
    for (const auto& e : state.events) {
        out << e.id << '\t' << escape_field(e.owner) << '\t'
            << escape_field(e.node_id) << '\n';
    }
}

LedgerState load_ledger(std::istream& in) {
    LedgerState state;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            throw std::runtime_error("ledger load: malformed line " + std::to_string(line_no));
        }
        const std::uint64_t id = std::stoull(line.substr(0, t1));
        const std::string owner = unescape_field(line.substr(t1 + 1, t2 - t1 - 1));
        const std::string node_id = unescape_field(line.substr(t2 + 1));
        if (id != state.total_nodes()) {
            throw std::runtime_error("ledger load: non-sequential id at line " +
                                     std::to_string(line_no));
        }
        join_bcsfl(state, owner, node_id);
    }
    return state;
}

}  // namespace bcsfl
