#include "mitodet/fileio.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>

#include "mitodet/error.hpp"

namespace mitodet {
namespace {

std::atomic<unsigned long> temp_counter{0};

}  // namespace

AtomicFile::AtomicFile(std::filesystem::path target) : target_(std::move(target)) {
  if (target_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target_.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + target_.parent_path().string() + "'");
  }
  temp_ = target_;
  temp_ += ".tmp." + std::to_string(temp_counter.fetch_add(1));
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFile::commit() {
  std::error_code ec;
  std::filesystem::rename(temp_, target_, ec);
  if (ec) throw IoError("cannot move '" + temp_.string() + "' to '" + target_.string() + "'");
  committed_ = true;
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  AtomicFile out(path);
  {
    std::ofstream f(out.temp_path(), std::ios::binary);
    if (!f) throw IoError("cannot open '" + out.temp_path().string() + "' for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("failed to write '" + path.string() + "'");
  }
  out.commit();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace mitodet
