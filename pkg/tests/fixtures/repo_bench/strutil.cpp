#include <string>

std::string TrimWhitespace(const std::string& input) {
    size_t begin = input.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    size_t end = input.find_last_not_of(" \t\r\n");
    return input.substr(begin, end - begin + 1);
}
