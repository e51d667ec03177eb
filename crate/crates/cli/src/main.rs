fn main() {
    println!("fracp experiment runner");
}
