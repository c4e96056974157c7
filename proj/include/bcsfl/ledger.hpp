#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bcsfl {

using Digest = std::array<std::uint8_t, 32>;

struct UavNodeRecord {
    std::string owner;    // opaque caller identity
    std::string node_id;  // label chosen by the caller
};

struct NodeJoinedEvent {
    std::uint64_t id = 0;
    std::string owner;
    std::string node_id;
};

// Emulation of the registration smart contract: a deterministic append-only
// log. Every event extends a hash chain,
//   hash_i = SHA-256(hash_{i-1} || encode(event_i)),  hash_{-1} = 32 zero bytes,
// where encode() is the canonical length-prefixed encoding (id as 8-byte
// big-endian, then owner and node_id each with a 4-byte big-endian length).
struct LedgerState {
    std::vector<UavNodeRecord> records;
    std::vector<NodeJoinedEvent> events;
    std::vector<Digest> chain;

    std::uint64_t total_nodes() const { return records.size(); }
};

// Canonical byte encoding of one event; bit-exact across implementations.
std::vector<std::uint8_t> encode_event(const NodeJoinedEvent& event);

Digest sha256(const std::uint8_t* data, std::size_t len);

// Register a node. Ids are assigned sequentially (id = total_nodes at join
// time). Throws std::invalid_argument on empty node_id, leaving the state
// untouched.
std::uint64_t join_bcsfl(LedgerState& state, const std::string& caller,
                         const std::string& node_id);

// Lookup by id. Throws std::out_of_range for id >= total_nodes.
const UavNodeRecord& get_node_by_id(const LedgerState& state, std::uint64_t id);

// Recompute every hash from genesis and compare with the stored chain.
bool verify_chain(const LedgerState& state);

// Audit dump/load: one event per line, tab-separated fields in canonical
// order (id, owner, node_id), with backslash escapes for \, tab and newline.
void dump_ledger(const LedgerState& state, std::ostream& out);
LedgerState load_ledger(std::istream& in);

}  // namespace bcsfl
