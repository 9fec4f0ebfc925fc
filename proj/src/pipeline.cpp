#include "crtmux/pipeline.hpp"

#include "crtmux/error.hpp"

#include <exception>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace crtmux {

CaptureWriter::CaptureWriter(const std::filesystem::path& dir, std::size_t channels) {
   std::filesystem::create_directories(dir);
   files_.reserve(channels);
   for (std::size_t c = 0; c < channels; ++c) {
      const auto path = dir / ("ch_" + std::to_string(c) + ".bin");
      files_.emplace_back(path, std::ios::binary | std::ios::trunc);
      if (!files_.back())
         throw Error(Errc::BadParameters, "cannot write " + path.string());
   }
}

void CaptureWriter::record(std::span<const ChannelPacket> packets) {
   for (const auto& p : packets)
      files_.at(p.channel).write(reinterpret_cast<const char*>(p.payload.data()),
                                 static_cast<std::streamsize>(p.payload.size()));
}

TransferStats send_stream(Sender& sender, std::istream& in, TransportBundle& bundle,
                          CaptureWriter* capture) {
   const std::size_t width = sender.config().superblock_bytes();
   TransferStats stats;
   Bytes chunk(width);
   for (;;) {
      in.read(reinterpret_cast<char*>(chunk.data()), static_cast<std::streamsize>(width));
      const auto got = static_cast<std::size_t>(in.gcount());
      stats.bytes += got;

      SuperBlock sb;
      const bool last = got < width;
      if (last)
         sb = pad(std::span(chunk.data(), got), sender.config().superblock_bits()).front();
      else
         sb.bytes = chunk;

      const auto packets = sender.process(sb);
      if (capture)
         capture->record(packets);
      broadcast_superblock(bundle, packets);
      ++stats.superblocks;
      if (last)
         break;
   }
   bundle.close_all();
   return stats;
}

TransferStats receive_stream(Receiver& receiver, TransportBundle& bundle, std::ostream& out,
                             std::optional<Millis> cell_timeout) {
   TransferStats stats;
   std::optional<SuperBlock> held;
   for (;;) {
      const auto& assignment = receiver.next_assignment();
      auto packets = gather_superblock(bundle, assignment.selected, cell_timeout);
      if (!packets)
         break;
      SuperBlock pt = receiver.process(*packets);
      if (held) {
         out.write(reinterpret_cast<const char*>(held->bytes.data()),
                   static_cast<std::streamsize>(held->bytes.size()));
         stats.bytes += held->bytes.size();
      }
      held = std::move(pt);
      ++stats.superblocks;
   }
   if (!held)
      throw Error(Errc::BadLength, "transmission ended before any superblock arrived");
   const std::size_t keep = unpadded_length(*held);
   out.write(reinterpret_cast<const char*>(held->bytes.data()), static_cast<std::streamsize>(keep));
   stats.bytes += keep;
   out.flush();
   return stats;
}

Bytes transfer_in_memory(const SetupConfig& sender_cfg, const SetupConfig& receiver_cfg,
                         std::span<const std::uint8_t> message) {
   auto [tx, rx] = open_memory_bundle(cell_widths(sender_cfg));

   std::exception_ptr send_error;
   std::thread sender_thread([&, bundle = std::move(tx)]() mutable {
      try {
         Sender sender(sender_cfg);
         std::istringstream in(std::string(message.begin(), message.end()));
         send_stream(sender, in, bundle);
      } catch (...) {
         send_error = std::current_exception();
         bundle.close_all();
      }
   });

   std::ostringstream out;
   std::exception_ptr recv_error;
   try {
      Receiver receiver(receiver_cfg);
      receive_stream(receiver, rx, out);
   } catch (...) {
      recv_error = std::current_exception();
   }
   // Dropping the receiving bundle unblocks a sender stuck on a full queue.
   rx = TransportBundle();
   sender_thread.join();

   if (recv_error)
      std::rethrow_exception(recv_error);
   if (send_error)
      std::rethrow_exception(send_error);
   const std::string s = out.str();
   return Bytes(s.begin(), s.end());
}

}  // namespace crtmux
