use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The closed set of element categories a page may contain.
///
/// `Artboard` is the page root; the other 25 labels are the RICO component
/// categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WidgetClass {
    WebView,
    ListItem,
    MultiTab,
    Input,
    TextButton,
    Slider,
    BackgroundImage,
    Advertisement,
    Card,
    BottomNavigation,
    Modal,
    OnOffSwitch,
    ButtonBar,
    NumberStepper,
    Text,
    MapView,
    Checkbox,
    DatePicker,
    Image,
    Drawer,
    RadioButton,
    Video,
    Toolbar,
    PagerIndicator,
    Icon,
    Artboard,
}

impl WidgetClass {
    /// All classes, in the order of the parser prompt's category list.
    pub const ALL: [WidgetClass; 26] = [
        WidgetClass::WebView,
        WidgetClass::ListItem,
        WidgetClass::MultiTab,
        WidgetClass::Input,
        WidgetClass::TextButton,
        WidgetClass::Slider,
        WidgetClass::BackgroundImage,
        WidgetClass::Advertisement,
        WidgetClass::Card,
        WidgetClass::BottomNavigation,
        WidgetClass::Modal,
        WidgetClass::OnOffSwitch,
        WidgetClass::ButtonBar,
        WidgetClass::NumberStepper,
        WidgetClass::Text,
        WidgetClass::MapView,
        WidgetClass::Checkbox,
        WidgetClass::DatePicker,
        WidgetClass::Image,
        WidgetClass::Drawer,
        WidgetClass::RadioButton,
        WidgetClass::Video,
        WidgetClass::Toolbar,
        WidgetClass::PagerIndicator,
        WidgetClass::Icon,
        WidgetClass::Artboard,
    ];

    /// Every class that may appear below the root.
    pub fn elements() -> impl Iterator<Item = WidgetClass> {
        Self::ALL.into_iter().filter(|c| *c != WidgetClass::Artboard)
    }

    pub fn label(self) -> &'static str {
        match self {
            WidgetClass::WebView => "Web View",
            WidgetClass::ListItem => "List Item",
            WidgetClass::MultiTab => "Multi-Tab",
            WidgetClass::Input => "Input",
            WidgetClass::TextButton => "Text Button",
            WidgetClass::Slider => "Slider",
            WidgetClass::BackgroundImage => "Background Image",
            WidgetClass::Advertisement => "Advertisement",
            WidgetClass::Card => "Card",
            WidgetClass::BottomNavigation => "Bottom Navigation",
            WidgetClass::Modal => "Modal",
            WidgetClass::OnOffSwitch => "On/Off Switch",
            WidgetClass::ButtonBar => "Button Bar",
            WidgetClass::NumberStepper => "Number Stepper",
            WidgetClass::Text => "Text",
            WidgetClass::MapView => "Map View",
            WidgetClass::Checkbox => "Checkbox",
            WidgetClass::DatePicker => "Date Picker",
            WidgetClass::Image => "Image",
            WidgetClass::Drawer => "Drawer",
            WidgetClass::RadioButton => "Radio Button",
            WidgetClass::Video => "Video",
            WidgetClass::Toolbar => "Toolbar",
            WidgetClass::PagerIndicator => "Pager Indicator",
            WidgetClass::Icon => "Icon",
            WidgetClass::Artboard => "artboard",
        }
    }

    /// Exact match against the canonical labels.
    pub fn from_label(label: &str) -> Option<WidgetClass> {
        Self::ALL.into_iter().find(|c| c.label() == label)
    }

    /// Resolves a label the way model output tends to spell it: exact match,
    /// then case/spacing-insensitive match, then the alias table, then a
    /// trailing-plural strip.
    pub fn resolve(label: &str) -> Option<Resolved> {
        let trimmed = label.trim();
        if let Some(class) = Self::from_label(trimmed) {
            return Some(Resolved { class, substituted: false });
        }
        let key = normalize(trimmed);
        if key.is_empty() {
            return None;
        }
        let lookup = |k: &str| {
            Self::ALL
                .into_iter()
                .find(|c| normalize(c.label()) == k)
                .or_else(|| {
                    ALIASES
                        .iter()
                        .find(|(alias, _)| *alias == k)
                        .map(|(_, class)| *class)
                })
        };
        let found = lookup(&key).or_else(|| key.strip_suffix('s').and_then(lookup));
        found.map(|class| Resolved { class, substituted: true })
    }

    pub fn ordinal(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap_or(0)
    }
}

/// Outcome of lenient label resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolved {
    pub class: WidgetClass,
    /// True when the input was not the exact canonical label.
    pub substituted: bool,
}

fn normalize(label: &str) -> String {
    label
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

// Keys are normalized (lowercase alphanumerics only).
const ALIASES: &[(&str, WidgetClass)] = &[
    ("picture", WidgetClass::Image),
    ("photo", WidgetClass::Image),
    ("img", WidgetClass::Image),
    ("button", WidgetClass::TextButton),
    ("textbutton", WidgetClass::TextButton),
    ("label", WidgetClass::Text),
    ("textview", WidgetClass::Text),
    ("title", WidgetClass::Text),
    ("edittext", WidgetClass::Input),
    ("textfield", WidgetClass::Input),
    ("searchbar", WidgetClass::Input),
    ("switch", WidgetClass::OnOffSwitch),
    ("toggle", WidgetClass::OnOffSwitch),
    ("onoffswitch", WidgetClass::OnOffSwitch),
    ("tab", WidgetClass::MultiTab),
    ("tabs", WidgetClass::MultiTab),
    ("tabbar", WidgetClass::MultiTab),
    ("navigationbar", WidgetClass::BottomNavigation),
    ("bottomnavigationbar", WidgetClass::BottomNavigation),
    ("bottombar", WidgetClass::BottomNavigation),
    ("appbar", WidgetClass::Toolbar),
    ("actionbar", WidgetClass::Toolbar),
    ("header", WidgetClass::Toolbar),
    ("dialog", WidgetClass::Modal),
    ("popup", WidgetClass::Modal),
    ("listitem", WidgetClass::ListItem),
    ("item", WidgetClass::ListItem),
    ("ad", WidgetClass::Advertisement),
    ("map", WidgetClass::MapView),
    ("webview", WidgetClass::WebView),
    ("stepper", WidgetClass::NumberStepper),
    ("radio", WidgetClass::RadioButton),
    ("check", WidgetClass::Checkbox),
    ("checkbox", WidgetClass::Checkbox),
    ("pageindicator", WidgetClass::PagerIndicator),
    ("datepicker", WidgetClass::DatePicker),
    ("seekbar", WidgetClass::Slider),
    ("backgroundimage", WidgetClass::BackgroundImage),
    ("buttonbar", WidgetClass::ButtonBar),
    ("root", WidgetClass::Artboard),
    ("page", WidgetClass::Artboard),
];

impl fmt::Display for WidgetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown widget class {0:?}")]
pub struct UnknownClass(pub String);

impl FromStr for WidgetClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WidgetClass::from_label(s).ok_or_else(|| UnknownClass(s.to_string()))
    }
}

impl Serialize for WidgetClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for WidgetClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
