fn main() {
    println!("valcli placeholder");
}
