#ifndef HEADFILT_UTF8_H_
#define HEADFILT_UTF8_H_

#include <string>
#include <string_view>

namespace headfilt {

// Decodes UTF-8 into Unicode scalars. Throws Error(kFormatError) on malformed
// input.
std::u32string utf8_decode(std::string_view text);

std::string utf8_encode(std::u32string_view text);
std::string utf8_encode(char32_t cp);

// "U+6797" style label.
std::string codepoint_label(char32_t cp);

}  // namespace headfilt

#endif  // HEADFILT_UTF8_H_
