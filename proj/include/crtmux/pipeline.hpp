#pragma once

#include "crtmux/scheme.hpp"
#include "crtmux/transport.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace crtmux {

struct TransferStats {
   std::uint64_t superblocks = 0;
   std::uint64_t bytes = 0;
};

/// Writes each channel's raw cell stream to dir/ch_<id>.bin.
class CaptureWriter {
public:
   CaptureWriter(const std::filesystem::path& dir, std::size_t channels);

   void record(std::span<const ChannelPacket> packets);

private:
   std::vector<std::ofstream> files_;
};

/// Reads `in` to exhaustion, pads, and broadcasts every superblock, then
/// closes all channels to signal end of transmission.
TransferStats send_stream(Sender& sender, std::istream& in, TransportBundle& bundle,
                          CaptureWriter* capture = nullptr);

/// Gathers superblocks until every channel ends, writing the unpadded
/// plaintext to `out`. Any integrity error aborts the transfer.
TransferStats receive_stream(Receiver& receiver, TransportBundle& bundle, std::ostream& out,
                             std::optional<Millis> cell_timeout = std::nullopt);

/// Both roles in-process over the memory backend. The receiver may use a
/// different config to model a mismatched key.
Bytes transfer_in_memory(const SetupConfig& sender_cfg, const SetupConfig& receiver_cfg,
                         std::span<const std::uint8_t> message);

}  // namespace crtmux
