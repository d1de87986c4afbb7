#include "c2sw/file_io.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "c2sw/error.hpp"

namespace c2sw {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

class FileHandle {
 public:
  explicit FileHandle(int fd) : fd_(fd) {}
  ~FileHandle() {
    if (fd_ >= 0) ::close(fd_);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

}  // namespace

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  FileHandle fd(::open(path.c_str(), O_WRONLY | O_CREAT, 0644));
  if (fd.get() < 0) {
    throw Error("cannot open " + path.string() + " for writing: " + std::strerror(errno));
  }
  if (::flock(fd.get(), LOCK_EX | LOCK_NB) != 0) {
    throw Error(path.string() + " is locked by another writer");
  }
  if (::ftruncate(fd.get(), 0) != 0) {
    throw Error("cannot truncate " + path.string() + ": " + std::strerror(errno));
  }
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd.get(), bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write to " + path.string() + " failed: " + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
}

}  // namespace c2sw
