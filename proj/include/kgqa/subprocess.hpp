#pragma once

#include <string>

namespace kgqa {

// One child process speaking a line-delimited request/response protocol over
// its standard streams. Spawned with /bin/sh -c so provider commands can be
// arbitrary shell one-liners. Not thread-safe; one in-flight request at a
// time.
class LineSubprocess {
public:
    explicit LineSubprocess(const std::string& command);
    ~LineSubprocess();

    LineSubprocess(const LineSubprocess&) = delete;
    LineSubprocess& operator=(const LineSubprocess&) = delete;

    // Writes one line (newline appended) and blocks for one reply line.
    // Throws on a dead child or closed stream.
    std::string request(const std::string& line);

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
    std::string command_;
};

}  // namespace kgqa
